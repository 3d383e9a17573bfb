#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idense/classify.hpp"
#include "idense/corpus.hpp"
#include "idense/embed.hpp"
#include "idense/pid.hpp"
#include "idense/sid.hpp"

namespace idense {

enum class FeatureKind { pid, cpidr, sid, clusters, bow, nv };

FeatureKind parse_feature_kind(std::string_view text);
std::string_view to_string(FeatureKind kind);

/// Where the embedding clusters are fit: on each training fold, or once on the whole corpus.
enum class ClusterScope { fold, full };

ClusterScope parse_cluster_scope(std::string_view text);
std::string_view to_string(ClusterScope scope);

struct FeatureOptions {
  Measure pid_measure = Measure::depid_r;
  PidConfig pid_config;
  const EmbeddingTable* embeddings = nullptr;
  KMeansOptions kmeans;
  double icu_threshold = kIcuThreshold;
  ClusterScope scope = ClusterScope::full;
  std::size_t bow_min_frequency = 2;
  ContentWordOptions content;
  /// Used as-is for SID and cluster features instead of fitting, whatever the scope.
  const ClusterModel* fixed_model = nullptr;
};

/// What one fold's cluster model was fit on.
struct FoldAudit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> training_vocab;
};

/// Feature rows computed from transcripts. PID, CPIDR-lite and noun/verb proportion are fixed
/// per sample; SID and cluster features depend on the cluster scope; BOW vocabularies are
/// always built from the training fold.
class CorpusFeatures : public FeatureSource {
 public:
  /// Transcripts should already be preprocessed (and carry specificity scores if the PID
  /// measure uses the vague filter). Samples without word tokens are excluded.
  CorpusFeatures(std::vector<Transcript> transcripts, std::vector<FeatureKind> kinds, FeatureOptions options);

  std::size_t size() const override { return transcripts_.size(); }
  const std::vector<std::string>& subject_ids() const override { return subject_ids_; }
  const std::vector<Label>& labels() const override { return labels_; }
  std::vector<std::string> feature_names() const override;
  FoldData build(std::span<const std::size_t> train, std::span<const std::size_t> test) const override;

  const std::vector<Transcript>& transcripts() const { return transcripts_; }
  const std::vector<std::string>& excluded() const { return excluded_; }

  /// Whole-corpus matrix (clusters and BOW vocabulary fit on every sample).
  FeatureMatrix full_matrix() const;

  /// Called for every fold-scope cluster fit.
  void on_fold_fit(std::function<void(const FoldAudit&)> callback) { audit_ = std::move(callback); }

  /// Fit on the whole corpus, present when the scope is `full` and cluster features are used.
  const std::optional<ClusterModel>& full_model() const { return full_model_; }

 private:
  bool needs_clusters() const;
  ClusterModel fit_clusters(std::span<const std::size_t> rows) const;
  Eigen::MatrixXd rows_for(std::span<const std::size_t> rows, const ClusterModel* model,
                           const std::vector<std::string>* bow_vocab) const;

  std::vector<Transcript> transcripts_;
  std::vector<FeatureKind> kinds_;
  FeatureOptions options_;
  std::vector<std::string> subject_ids_;
  std::vector<Label> labels_;
  std::vector<std::string> excluded_;
  std::optional<ClusterModel> full_model_;
  std::function<void(const FoldAudit&)> audit_;
  mutable std::mutex audit_mutex_;
};

}  // namespace idense
