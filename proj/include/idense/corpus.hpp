#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace idense {

enum class Label { patient, control };

std::string_view to_string(Label label);

/// Maps a manifest label to a class. Aliases (case-insensitive):
/// patient <- AD, ProbableAD, patient, 1; control <- Ctrl, Control, HC, 0.
std::optional<Label> parse_label(std::string_view text);

/// One syntactic word of a CoNLL-U sentence.
struct Token {
  int index = 0;  // 1-based position in the sentence
  std::string surface;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = root
  std::string deprel;
  std::string misc = "_";
  bool is_punct = false;

  /// Lowercased lemma, falling back to the lowercased surface when the lemma is "_" or empty.
  std::string key_lemma() const;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string sentence_id;
  std::optional<double> specificity;

  bool operator==(const Sentence&) const = default;
};

struct Transcript {
  std::string sample_id;
  std::string subject_id;
  Label label = Label::control;
  std::vector<Sentence> sentences;
};

struct ManifestEntry {
  std::string subject_id;
  std::string sample_id;
  Label label = Label::control;
  std::filesystem::path conllu_path;
  std::optional<std::filesystem::path> specificity_path;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;

  std::size_t subject_count() const;
};

/// POS tags (UPOS or XPOS column) treated as punctuation. The default is the universal tag only.
struct PunctuationTags {
  std::set<std::string> tags{"PUNCT"};

  bool contains(std::string_view tag) const { return tags.count(std::string(tag)) > 0; }
};

/// Reads `subject_id,sample_id,label,conllu_path,specificity_path`. Paths are resolved
/// against the manifest's directory. The specificity_path column may be absent or empty.
CorpusManifest read_manifest(const std::filesystem::path& path);

/// Parses CoNLL-U text. Range lines ("3-4") and empty nodes ("5.1") are skipped.
/// `# sent_id = X` sets the sentence id; otherwise ids are "s1", "s2", ... in order.
std::vector<Sentence> parse_conllu(std::string_view text, const PunctuationTags& punct = {},
                                   std::string_view context = "conllu");

std::vector<Sentence> load_conllu(const std::filesystem::path& path, const PunctuationTags& punct = {});

/// Serialises sentences back to CoNLL-U (DEPS column written as "_").
std::string write_conllu(const std::vector<Sentence>& sentences);

/// Checks arity, head range, self loops, single root and reachability. Throws TreeError.
void validate_tree(const Sentence& sentence);

/// Loads every manifest entry's transcript (sidecar scores are attached by the specificity module).
std::vector<Transcript> load_corpus(const CorpusManifest& manifest, const PunctuationTags& punct = {});

inline const std::set<std::string>& default_filler_lexicon() {
  static const std::set<std::string> lexicon{"um", "uh", "er", "ah"};
  return lexicon;
}

struct PreprocessResult {
  Transcript transcript;
  std::size_t removed_tokens = 0;
  std::size_t dropped_sentences = 0;
};

/// Removes filled pauses. Dependents of a removed token are promoted to its head; a removed
/// root is replaced by its first surviving dependent. Sentences left empty are dropped.
PreprocessResult preprocess(const Transcript& transcript,
                            const std::set<std::string>& filler_lexicon = default_filler_lexicon());

std::size_t word_token_count(const Sentence& sentence);
std::size_t word_token_count(const Transcript& transcript);

}  // namespace idense
