#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "idense/corpus.hpp"
#include "idense/embed.hpp"

namespace idense {

enum class ContentPos { noun, verb };

struct ContentWordOptions {
  bool include_proper_nouns = false;
};

/// A noun or verb token together with its embedding-cluster placement, when in vocabulary.
struct ContentWord {
  std::string surface;
  std::string lemma;
  ContentPos pos = ContentPos::noun;
  std::optional<Eigen::VectorXd> vector;
  std::optional<Eigen::Index> cluster;
  std::optional<double> scaled_distance;
};

/// Noun/verb class of a token (UPOS, falling back to Penn XPOS), if it is one.
std::optional<ContentPos> content_pos(const Token& token, const ContentWordOptions& options = {});

/// Nouns and verbs in transcript order. Vectors are looked up by lowercased surface, then
/// lowercased lemma; out-of-vocabulary words keep an empty vector.
std::vector<ContentWord> content_words(const Transcript& transcript, const EmbeddingTable& table,
                                       const ContentWordOptions& options = {});

/// Fills cluster and scaled distance of every in-vocabulary word.
void place_in_clusters(std::vector<ContentWord>& words, const ClusterModel& model);

/// Fraction of content words found in the table; 0 when there are none.
double vocabulary_coverage(const std::vector<ContentWord>& words);

/// Embedding key under which a content token is found (surface first, then lemma).
std::optional<std::string> embedding_key(const Token& token, const EmbeddingTable& table);

/// Distinct in-vocabulary noun/verb types of the given transcripts, sorted. One vector per type
/// is what the cluster model is fit on.
std::vector<std::string> cluster_vocabulary(const std::vector<const Transcript*>& transcripts,
                                            const EmbeddingTable& table, const ContentWordOptions& options = {});

inline constexpr double kIcuThreshold = 3.0;

/// Content-word tokens with scaled distance below `threshold` per word token.
double sid_score(const Transcript& transcript, const ClusterModel& model, const EmbeddingTable& table,
                 double threshold = kIcuThreshold, const ContentWordOptions& options = {});

struct ClusterFeatureVector {
  Eigen::VectorXd values;  // one per cluster
  double coverage = 0.0;
};

/// Mean scaled distance of the content-word tokens assigned to each cluster (0 for none).
ClusterFeatureVector cluster_features(const Transcript& transcript, const ClusterModel& model,
                                      const EmbeddingTable& table, const ContentWordOptions& options = {});

/// Noun/verb lemmas occurring at least `min_frequency` times, sorted.
std::vector<std::string> build_bow_vocabulary(const std::vector<const Transcript*>& transcripts,
                                              std::size_t min_frequency = 2, const ContentWordOptions& options = {});

/// Noun/verb lemma counts over the vocabulary, divided by word tokens.
Eigen::VectorXd bow_features(const Transcript& transcript, const std::vector<std::string>& vocabulary,
                             const ContentWordOptions& options = {});

/// (nouns + verbs) / word tokens.
double nv_proportion(const Transcript& transcript, const ContentWordOptions& options = {});

}  // namespace idense
