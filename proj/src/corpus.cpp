#include "idense/corpus.hpp"

#include <algorithm>
#include <iostream>
#include <unordered_set>

#include "idense/error.hpp"
#include "idense/io.hpp"

namespace idense {

std::string_view to_string(Label label) {
  return label == Label::patient ? "patient" : "control";
}

std::optional<Label> parse_label(std::string_view text) {
  const auto t = io::to_lower(io::trim(text));
  if (t == "ad" || t == "probablead" || t == "patient" || t == "1") return Label::patient;
  if (t == "ctrl" || t == "control" || t == "hc" || t == "0") return Label::control;
  return std::nullopt;
}

std::string Token::key_lemma() const {
  if (lemma.empty() || lemma == "_") return io::to_lower(surface);
  return io::to_lower(lemma);
}

std::size_t CorpusManifest::subject_count() const {
  std::unordered_set<std::string> subjects;
  for (const auto& e : entries) subjects.insert(e.subject_id);
  return subjects.size();
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  const auto table = io::read_csv(path);
  const auto ctx = path.string();
  const auto c_subject = table.require_column("subject_id", ctx);
  const auto c_sample = table.require_column("sample_id", ctx);
  const auto c_label = table.require_column("label", ctx);
  const auto c_conllu = table.require_column("conllu_path", ctx);
  const auto c_spec = table.column("specificity_path");
  const auto base = path.parent_path();

  CorpusManifest manifest;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lines[r];
    auto field = [&](std::size_t c) -> std::string {
      return c < row.size() ? io::trim(row[c]) : std::string{};
    };
    ManifestEntry e;
    e.subject_id = field(c_subject);
    e.sample_id = field(c_sample);
    if (e.sample_id.empty() || e.subject_id.empty())
      throw ValidationError(ctx + ": empty subject_id or sample_id (line " + std::to_string(line) + ")");
    if (!seen.insert(e.sample_id).second)
      throw ValidationError(ctx + ": duplicate sample_id '" + e.sample_id + "' (line " + std::to_string(line) + ")");
    const auto label_text = field(c_label);
    auto label = parse_label(label_text);
    if (!label)
      throw ValidationError(ctx + ": unknown label '" + label_text + "' (line " + std::to_string(line) + ")");
    e.label = *label;
    const auto conllu = field(c_conllu);
    if (conllu.empty())
      throw ValidationError(ctx + ": empty conllu_path (line " + std::to_string(line) + ")");
    e.conllu_path = base / conllu;
    if (c_spec) {
      auto spec = field(*c_spec);
      if (!spec.empty()) e.specificity_path = base / spec;
    }
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) {
    manifest.warnings.push_back(ctx + ": manifest has no data rows");
    std::cerr << "warning: " << manifest.warnings.back() << '\n';
  }
  return manifest;
}

void validate_tree(const Sentence& sentence) {
  const auto n = static_cast<int>(sentence.tokens.size());
  const auto where = "sentence '" + sentence.sentence_id + "'";
  if (n == 0) throw TreeError(where + ": no tokens");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& t = sentence.tokens[i];
    if (t.index != i + 1) throw TreeError(where + ": token ids are not 1..n");
    if (t.head < 0 || t.head > n) throw TreeError(where + ": head out of range at token " + std::to_string(t.index));
    if (t.head == t.index) throw TreeError(where + ": self loop at token " + std::to_string(t.index));
    if (t.deprel.empty() || t.deprel == "_")
      throw TreeError(where + ": empty deprel at token " + std::to_string(t.index));
    if (t.head == 0) ++roots;
  }
  if (roots != 1) throw TreeError(where + ": expected exactly one root, found " + std::to_string(roots));
  // Every token must reach the root without revisiting a node.
  std::vector<int> state(n + 1, 0);  // 0 unknown, 1 on path, 2 reaches root
  state[0] = 2;
  for (int i = 1; i <= n; ++i) {
    std::vector<int> path;
    int cur = i;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = sentence.tokens[cur - 1].head;
    }
    if (state[cur] == 1) throw TreeError(where + ": cycle through token " + std::to_string(cur));
    for (int p : path) state[p] = 2;
  }
}

namespace {

bool is_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::vector<Sentence> parse_conllu(std::string_view text, const PunctuationTags& punct, std::string_view context) {
  std::vector<Sentence> sentences;
  Sentence current;
  std::size_t block_line = 0;
  std::size_t line_no = 0;
  bool in_block = false;
  const std::string ctx(context);

  auto flush = [&] {
    in_block = false;
    if (current.tokens.empty()) {
      current = Sentence{};
      return;
    }
    if (current.sentence_id.empty()) current.sentence_id = "s" + std::to_string(sentences.size() + 1);
    try {
      validate_tree(current);
    } catch (const TreeError& e) {
      throw TreeError(ctx + ": " + e.what() + " (block starting line " + std::to_string(block_line) + ")");
    }
    sentences.push_back(std::move(current));
    current = Sentence{};
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line(raw);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (io::trim(line).empty()) {
      flush();
      continue;
    }
    if (!in_block) {
      in_block = true;
      block_line = line_no;
    }
    if (line[0] == '#') {
      auto body = io::trim(std::string_view(line).substr(1));
      if (body.rfind("sent_id", 0) == 0) {
        auto eq = body.find('=');
        if (eq != std::string::npos) current.sentence_id = io::trim(std::string_view(body).substr(eq + 1));
      }
      continue;
    }
    auto cols = io::split(line, '\t');
    if (cols.size() != 10)
      throw ParseError(ctx + ": expected 10 tab-separated columns, found " + std::to_string(cols.size()), line_no);
    const auto& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    if (!is_integer(id)) throw ParseError(ctx + ": non-integer token id '" + id + "'", line_no);
    if (!is_integer(cols[6])) throw ParseError(ctx + ": non-integer head '" + cols[6] + "'", line_no);

    Token t;
    t.index = std::stoi(id);
    if (t.index != static_cast<int>(current.tokens.size()) + 1)
      throw ParseError(ctx + ": token id " + id + " out of sequence", line_no);
    t.surface = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.head = std::stoi(cols[6]);
    t.deprel = cols[7];
    t.misc = cols[9];
    t.is_punct = punct.contains(t.upos) || (t.xpos != "_" && punct.contains(t.xpos));
    current.tokens.push_back(std::move(t));
  }
  flush();
  return sentences;
}

std::vector<Sentence> load_conllu(const std::filesystem::path& path, const PunctuationTags& punct) {
  return parse_conllu(io::read_file(path), punct, path.string());
}

std::string write_conllu(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    out += "# sent_id = " + s.sentence_id + "\n";
    for (const auto& t : s.tokens) {
      out += std::to_string(t.index) + '\t' + t.surface + '\t' + t.lemma + '\t' + t.upos + '\t' + t.xpos + '\t' +
             t.feats + '\t' + std::to_string(t.head) + '\t' + t.deprel + "\t_\t" + t.misc + '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<Transcript> load_corpus(const CorpusManifest& manifest, const PunctuationTags& punct) {
  std::vector<Transcript> corpus;
  corpus.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    if (!std::filesystem::exists(e.conllu_path))
      throw IoError("transcript not found: '" + e.conllu_path.string() + "' (sample " + e.sample_id + ")");
    Transcript t;
    t.sample_id = e.sample_id;
    t.subject_id = e.subject_id;
    t.label = e.label;
    t.sentences = load_conllu(e.conllu_path, punct);
    corpus.push_back(std::move(t));
  }
  return corpus;
}

namespace {

// Returns nullopt when every token is a filler.
std::optional<Sentence> remove_fillers(const Sentence& s, const std::set<std::string>& lexicon,
                                       std::size_t& removed) {
  const auto n = s.tokens.size();
  std::vector<bool> keep(n + 1, true);
  std::size_t kept = 0;
  for (const auto& t : s.tokens) {
    keep[t.index] = lexicon.count(io::to_lower(t.surface)) == 0;
    kept += keep[t.index];
  }
  removed += n - kept;
  if (kept == n) return s;
  if (kept == 0) return std::nullopt;

  auto head_of = [&](int i) { return s.tokens[i - 1].head; };
  std::vector<int> new_head(n + 1, 0);
  std::vector<int> orphans;  // kept tokens whose chain ends at a removed root
  for (int i = 1; i <= static_cast<int>(n); ++i) {
    if (!keep[i]) continue;
    int h = head_of(i);
    std::size_t guard = 0;
    while (h != 0 && !keep[h] && guard++ <= n) h = head_of(h);
    new_head[i] = h;
    if (h == 0) orphans.push_back(i);
  }

  int root = orphans.front();
  const auto old_root = std::find_if(s.tokens.begin(), s.tokens.end(), [](const Token& t) { return t.head == 0; });
  bool root_removed = old_root != s.tokens.end() && !keep[old_root->index];
  if (root_removed) {
    // Prefer the first surviving direct dependent of the removed root.
    for (int i : orphans)
      if (head_of(i) == old_root->index) {
        root = i;
        break;
      }
    for (int i : orphans)
      if (i != root) new_head[i] = root;
  }

  std::vector<int> remap(n + 1, 0);
  int next = 1;
  for (int i = 1; i <= static_cast<int>(n); ++i)
    if (keep[i]) remap[i] = next++;

  Sentence out;
  out.sentence_id = s.sentence_id;
  out.specificity = s.specificity;
  for (const auto& t : s.tokens) {
    if (!keep[t.index]) continue;
    Token c = t;
    c.index = remap[t.index];
    c.head = new_head[t.index] == 0 ? 0 : remap[new_head[t.index]];
    if (root_removed && t.index == root) c.deprel = "root";
    out.tokens.push_back(std::move(c));
  }
  return out;
}

}  // namespace

PreprocessResult preprocess(const Transcript& transcript, const std::set<std::string>& filler_lexicon) {
  PreprocessResult result;
  result.transcript.sample_id = transcript.sample_id;
  result.transcript.subject_id = transcript.subject_id;
  result.transcript.label = transcript.label;
  for (const auto& s : transcript.sentences) {
    auto cleaned = remove_fillers(s, filler_lexicon, result.removed_tokens);
    if (cleaned)
      result.transcript.sentences.push_back(std::move(*cleaned));
    else
      ++result.dropped_sentences;
  }
  if (result.dropped_sentences)
    std::cerr << "warning: " << transcript.sample_id << ": dropped " << result.dropped_sentences
              << " sentence(s) consisting only of filled pauses\n";
  return result;
}

std::size_t word_token_count(const Sentence& sentence) {
  return static_cast<std::size_t>(
      std::count_if(sentence.tokens.begin(), sentence.tokens.end(), [](const Token& t) { return !t.is_punct; }));
}

std::size_t word_token_count(const Transcript& transcript) {
  std::size_t n = 0;
  for (const auto& s : transcript.sentences) n += word_token_count(s);
  return n;
}

}  // namespace idense
