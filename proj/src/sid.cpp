#include "idense/sid.hpp"

#include <map>
#include <set>

#include "idense/error.hpp"
#include "idense/io.hpp"

namespace idense {

std::optional<ContentPos> content_pos(const Token& token, const ContentWordOptions& options) {
  if (token.is_punct) return std::nullopt;
  const auto& u = token.upos;
  if (!u.empty() && u != "_") {
    if (u == "NOUN" || (options.include_proper_nouns && u == "PROPN")) return ContentPos::noun;
    if (u == "VERB") return ContentPos::verb;
    return std::nullopt;
  }
  const auto& x = token.xpos;
  if (x == "NN" || x == "NNS") return ContentPos::noun;
  if (options.include_proper_nouns && (x == "NNP" || x == "NNPS")) return ContentPos::noun;
  if (x.rfind("VB", 0) == 0) return ContentPos::verb;
  return std::nullopt;
}

std::optional<std::string> embedding_key(const Token& token, const EmbeddingTable& table) {
  auto surface = io::to_lower(token.surface);
  if (table.find(surface)) return surface;
  auto lemma = token.key_lemma();
  if (table.find(lemma)) return lemma;
  return std::nullopt;
}

std::vector<ContentWord> content_words(const Transcript& transcript, const EmbeddingTable& table,
                                       const ContentWordOptions& options) {
  std::vector<ContentWord> out;
  for (const auto& s : transcript.sentences)
    for (const auto& t : s.tokens) {
      auto pos = content_pos(t, options);
      if (!pos) continue;
      ContentWord w;
      w.surface = t.surface;
      w.lemma = t.key_lemma();
      w.pos = *pos;
      if (auto key = embedding_key(t, table)) w.vector = table.lookup(*key);
      out.push_back(std::move(w));
    }
  return out;
}

void place_in_clusters(std::vector<ContentWord>& words, const ClusterModel& model) {
  for (auto& w : words) {
    if (!w.vector) continue;
    const auto d = scaled_distance(*w.vector, model);
    w.cluster = d.cluster;
    w.scaled_distance = d.scaled;
  }
}

double vocabulary_coverage(const std::vector<ContentWord>& words) {
  if (words.empty()) return 0.0;
  std::size_t in_vocab = 0;
  for (const auto& w : words) in_vocab += w.vector.has_value();
  return static_cast<double>(in_vocab) / static_cast<double>(words.size());
}

std::vector<std::string> cluster_vocabulary(const std::vector<const Transcript*>& transcripts,
                                            const EmbeddingTable& table, const ContentWordOptions& options) {
  std::set<std::string> types;
  for (const auto* t : transcripts)
    for (const auto& s : t->sentences)
      for (const auto& tok : s.tokens)
        if (content_pos(tok, options))
          if (auto key = embedding_key(tok, table)) types.insert(*key);
  return {types.begin(), types.end()};
}

double sid_score(const Transcript& transcript, const ClusterModel& model, const EmbeddingTable& table,
                 double threshold, const ContentWordOptions& options) {
  const auto words = word_token_count(transcript);
  if (words == 0) throw UndefinedDensityError("sample '" + transcript.sample_id + "' has no word tokens");
  auto cw = content_words(transcript, table, options);
  place_in_clusters(cw, model);
  std::size_t icus = 0;
  for (const auto& w : cw)
    if (w.scaled_distance && *w.scaled_distance < threshold) ++icus;
  return static_cast<double>(icus) / static_cast<double>(words);
}

ClusterFeatureVector cluster_features(const Transcript& transcript, const ClusterModel& model,
                                      const EmbeddingTable& table, const ContentWordOptions& options) {
  auto cw = content_words(transcript, table, options);
  place_in_clusters(cw, model);
  ClusterFeatureVector out;
  out.values = Eigen::VectorXd::Zero(model.k());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(model.k());
  for (const auto& w : cw) {
    if (!w.cluster) continue;
    out.values(*w.cluster) += *w.scaled_distance;
    counts(*w.cluster) += 1;
  }
  for (Eigen::Index c = 0; c < model.k(); ++c)
    if (counts(c) > 0) out.values(c) /= counts(c);
  out.coverage = vocabulary_coverage(cw);
  return out;
}

std::vector<std::string> build_bow_vocabulary(const std::vector<const Transcript*>& transcripts,
                                              std::size_t min_frequency, const ContentWordOptions& options) {
  std::map<std::string, std::size_t> freq;
  for (const auto* t : transcripts)
    for (const auto& s : t->sentences)
      for (const auto& tok : s.tokens)
        if (content_pos(tok, options)) ++freq[tok.key_lemma()];
  std::vector<std::string> vocab;
  for (const auto& [w, n] : freq)
    if (n >= min_frequency) vocab.push_back(w);
  return vocab;
}

Eigen::VectorXd bow_features(const Transcript& transcript, const std::vector<std::string>& vocabulary,
                             const ContentWordOptions& options) {
  if (vocabulary.empty()) throw ValidationError("bag-of-words vocabulary is empty");
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index.emplace(vocabulary[i], static_cast<Eigen::Index>(i));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary.size()));
  const auto words = word_token_count(transcript);
  if (words == 0) return v;
  for (const auto& s : transcript.sentences)
    for (const auto& tok : s.tokens) {
      if (!content_pos(tok, options)) continue;
      auto it = index.find(tok.key_lemma());
      if (it != index.end()) v(it->second) += 1;
    }
  return v / static_cast<double>(words);
}

double nv_proportion(const Transcript& transcript, const ContentWordOptions& options) {
  const auto words = word_token_count(transcript);
  if (words == 0) throw UndefinedDensityError("sample '" + transcript.sample_id + "' has no word tokens");
  std::size_t nv = 0;
  for (const auto& s : transcript.sentences)
    for (const auto& tok : s.tokens) nv += content_pos(tok, options).has_value();
  return static_cast<double>(nv) / static_cast<double>(words);
}

}  // namespace idense
