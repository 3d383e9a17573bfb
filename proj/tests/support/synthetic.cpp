#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "idense/io.hpp"

namespace idense::testing {

namespace {

struct Choice {
  const char* deprel;
  const char* upos;
  std::vector<std::string> lemmas;
};

const std::vector<Choice>& random_choices() {
  static const std::vector<Choice> choices{
      {"nsubj", "PRON", {"i", "you", "it", "this", "he", "she"}},
      {"nsubj", "NOUN", {"boy", "girl", "mother", "dog"}},
      {"nsubjpass", "PRON", {"i", "you", "it"}},
      {"det", "DET", {"the", "a", "an", "this", "that"}},
      {"amod", "ADJ", {"old", "gray", "happy", "large", "red"}},
      {"advmod", "ADV", {"very", "there", "again", "not"}},
      {"neg", "PART", {"not", "never"}},
      {"cc", "CCONJ", {"and", "but", "or"}},
      {"prep", "ADP", {"in", "on", "from", "with"}},
      {"nummod", "NUM", {"two", "three", "40"}},
      {"poss", "PRON", {"my", "his", "her"}},
      {"tmod", "NOUN", {"today", "yesterday"}},
      {"dobj", "NOUN", {"cookie", "life", "nose", "jar"}},
      {"aux", "AUX", {"be", "have", "do"}},
      {"vmod", "VERB", {"run", "fall"}},
      {"appos", "NOUN", {"friend", "doctor"}},
      {"advcl", "VERB", {"know", "take"}},
      {"npadvmod", "NOUN", {"year", "time"}},
      {"quantmod", "ADV", {"about", "almost"}},
      {"compound", "NOUN", {"kitchen", "apple"}},
  };
  return choices;
}

Token make_token(int index, const std::string& lemma, const std::string& upos, int head, const std::string& deprel) {
  Token t;
  t.index = index;
  t.surface = lemma;
  t.lemma = lemma;
  t.upos = upos;
  t.head = head;
  t.deprel = deprel;
  t.is_punct = upos == "PUNCT";
  return t;
}

}  // namespace

Sentence random_sentence(Rng& rng, int min_tokens, int max_tokens, const std::string& id) {
  const int n = min_tokens + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_tokens - min_tokens + 1)));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  rng.shuffle(order);
  std::vector<int> head(static_cast<std::size_t>(n + 1), 0);
  for (std::size_t i = 1; i < order.size(); ++i) head[static_cast<std::size_t>(order[i])] = order[rng.index(i)];

  static const std::vector<std::string> verbs{"have", "see", "take", "be", "go"};
  Sentence s;
  s.sentence_id = id;
  const auto& choices = random_choices();
  for (int i = 1; i <= n; ++i) {
    const auto h = head[static_cast<std::size_t>(i)];
    if (h == 0) {
      s.tokens.push_back(make_token(i, verbs[rng.index(verbs.size())], "VERB", 0, "root"));
    } else if (rng.uniform() < 0.08) {
      s.tokens.push_back(make_token(i, ".", "PUNCT", h, "punct"));
    } else {
      const auto& c = choices[rng.index(choices.size())];
      s.tokens.push_back(make_token(i, c.lemmas[rng.index(c.lemmas.size())], c.upos, h, c.deprel));
    }
  }
  const double u = rng.uniform();
  s.specificity = u < 0.2 ? rng.uniform(0.0, 0.01) : rng.uniform();
  return s;
}

Transcript random_transcript(Rng& rng, const std::string& sample_id, int max_sentences) {
  Transcript t;
  t.sample_id = sample_id;
  t.subject_id = sample_id;
  t.label = rng.uniform() < 0.5 ? Label::patient : Label::control;
  const int count = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_sentences)));
  for (int i = 0; i < count; ++i)
    t.sentences.push_back(random_sentence(rng, 1, 14, sample_id + "-s" + std::to_string(i + 1)));
  return t;
}

namespace {

struct Slot {
  const char* deprel;
  const char* upos;
  const char* xpos;
  std::vector<std::string> lemmas;
};

const std::vector<Slot>& proposition_slots() {
  static const std::vector<Slot> slots{
      {"amod", "ADJ", "JJ", {"old", "gray", "large", "small", "happy", "wet", "red", "tall"}},
      {"advmod", "ADV", "RB", {"very", "quickly", "slowly", "there", "again", "really"}},
      {"nsubj", "NOUN", "NN", {"boy", "girl", "mother", "woman", "dog", "man"}},
      {"nummod", "NUM", "CD", {"two", "three", "four", "five"}},
      {"prep", "ADP", "IN", {"in", "on", "from", "near", "over"}},
      {"poss", "PRON", "PRP$", {"my", "his", "her", "their"}},
  };
  return slots;
}

const std::vector<Slot>& filler_slots() {
  static const std::vector<Slot> slots{
      {"dobj", "NOUN", "NN", {"cookie", "jar", "sink", "plate", "stool", "window", "water", "dish"}},
      {"det", "DET", "DT", {"the", "a"}},
      {"aux", "AUX", "VBZ", {"be", "have"}},
      {"compound", "NOUN", "NN", {"kitchen", "apple", "cookie", "dish"}},
      {"mark", "SCONJ", "IN", {"while", "because"}},
  };
  return slots;
}

constexpr int kWordsPerSentence = 10;

std::vector<Transcript> build_study(const StudyDesign& d, std::vector<double>* targets) {
  Rng rng(derive_seed(d.seed, SeedStream::synthetic, 0));
  static const std::vector<std::string> roots{"take", "fall", "dry", "overflow", "reach", "stand", "see"};
  std::vector<Transcript> out;
  const int sentences = d.words_per_sample / kWordsPerSentence;
  const int slots_total = sentences * (kWordsPerSentence - 1);
  for (int subj = 0; subj < d.subjects; ++subj) {
    const bool patient = subj % 2 == 0;
    for (int smp = 0; smp < d.samples_per_subject; ++smp) {
      Transcript t;
      t.subject_id = "subj" + std::to_string(subj + 1);
      t.sample_id = t.subject_id + "-" + std::to_string(smp + 1);
      t.label = patient ? Label::patient : Label::control;
      const double target = rng.normal(patient ? d.patient_mean : d.control_mean, d.noise_sd);
      const int words = sentences * kWordsPerSentence;
      const int props = std::clamp(static_cast<int>(std::lround(target * words)), 0, slots_total);
      if (targets) targets->push_back(static_cast<double>(props) / words);
      std::vector<bool> is_prop(static_cast<std::size_t>(slots_total), false);
      std::fill(is_prop.begin(), is_prop.begin() + props, true);
      rng.shuffle(is_prop);
      std::size_t slot = 0;
      for (int s = 0; s < sentences; ++s) {
        Sentence sent;
        sent.sentence_id = "s" + std::to_string(s + 1);
        sent.specificity = 0.5;
        const int root = 1 + static_cast<int>(rng.index(kWordsPerSentence));
        for (int i = 1; i <= kWordsPerSentence; ++i) {
          if (i == root) {
            auto tok = make_token(i, roots[rng.index(roots.size())], "VERB", 0, "root");
            tok.xpos = "VBZ";
            sent.tokens.push_back(tok);
            continue;
          }
          const auto& pool = is_prop[slot++] ? proposition_slots() : filler_slots();
          const auto& c = pool[rng.index(pool.size())];
          auto tok = make_token(i, c.lemmas[rng.index(c.lemmas.size())], c.upos, root, c.deprel);
          tok.xpos = c.xpos;
          sent.tokens.push_back(tok);
        }
        auto stop = make_token(kWordsPerSentence + 1, ".", "PUNCT", root, "punct");
        stop.xpos = ".";
        sent.tokens.push_back(stop);
        t.sentences.push_back(std::move(sent));
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

std::vector<Transcript> synthetic_study(const StudyDesign& design) { return build_study(design, nullptr); }

std::vector<double> synthetic_targets(const StudyDesign& design) {
  std::vector<double> targets;
  build_study(design, &targets);
  return targets;
}

std::filesystem::path write_corpus(const std::vector<Transcript>& transcripts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string manifest = "subject_id,sample_id,label,conllu_path\n";
  for (const auto& t : transcripts) {
    const auto file = t.sample_id + ".conllu";
    io::write_file_atomic(dir / file, write_conllu(t.sentences));
    manifest += io::csv_row({t.subject_id, t.sample_id, t.label == Label::patient ? "AD" : "Ctrl", file});
  }
  io::write_file_atomic(dir / "manifest.csv", manifest);
  return dir / "manifest.csv";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("idense-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace idense::testing
