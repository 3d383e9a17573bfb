#include "idense/features.hpp"

#include <iostream>
#include <numeric>

#include "idense/error.hpp"
#include "idense/io.hpp"

namespace idense {

FeatureKind parse_feature_kind(std::string_view text) {
  const auto t = io::to_lower(io::trim(text));
  if (t == "pid") return FeatureKind::pid;
  if (t == "cpidr" || t == "cpidr-lite") return FeatureKind::cpidr;
  if (t == "sid") return FeatureKind::sid;
  if (t == "clusters" || t == "c") return FeatureKind::clusters;
  if (t == "bow") return FeatureKind::bow;
  if (t == "nv") return FeatureKind::nv;
  throw ConfigError("unknown feature kind '" + std::string(text) + "'");
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::pid: return "pid";
    case FeatureKind::cpidr: return "cpidr";
    case FeatureKind::sid: return "sid";
    case FeatureKind::clusters: return "clusters";
    case FeatureKind::bow: return "bow";
    case FeatureKind::nv: return "nv";
  }
  return "?";
}

ClusterScope parse_cluster_scope(std::string_view text) {
  const auto t = io::to_lower(text);
  if (t == "fold") return ClusterScope::fold;
  if (t == "full") return ClusterScope::full;
  throw ConfigError("unknown cluster scope '" + std::string(text) + "' (expected fold or full)");
}

std::string_view to_string(ClusterScope scope) { return scope == ClusterScope::fold ? "fold" : "full"; }

CorpusFeatures::CorpusFeatures(std::vector<Transcript> transcripts, std::vector<FeatureKind> kinds,
                               FeatureOptions options)
    : kinds_(std::move(kinds)), options_(options) {
  if (kinds_.empty()) throw ConfigError("no feature kinds selected");
  for (auto& t : transcripts) {
    if (word_token_count(t) == 0) {
      excluded_.push_back(t.sample_id);
      std::cerr << "warning: sample '" << t.sample_id << "' has no word tokens and is excluded\n";
      continue;
    }
    subject_ids_.push_back(t.subject_id);
    labels_.push_back(t.label);
    transcripts_.push_back(std::move(t));
  }
  if (needs_clusters() && !options_.embeddings)
    throw ConfigError("sid/cluster features need an embeddings file");
  if (options_.fixed_model) {
    full_model_ = *options_.fixed_model;
  } else if (needs_clusters() && options_.scope == ClusterScope::full) {
    std::vector<std::size_t> all(transcripts_.size());
    std::iota(all.begin(), all.end(), 0);
    full_model_ = fit_clusters(all);
  }
}

bool CorpusFeatures::needs_clusters() const {
  for (auto k : kinds_)
    if (k == FeatureKind::sid || k == FeatureKind::clusters) return true;
  return false;
}

std::vector<std::string> CorpusFeatures::feature_names() const {
  std::vector<std::string> names;
  for (auto k : kinds_) {
    switch (k) {
      case FeatureKind::pid: names.emplace_back(to_string(options_.pid_measure)); break;
      case FeatureKind::cpidr: names.emplace_back("cpidr-lite"); break;
      case FeatureKind::sid: names.emplace_back("sid"); break;
      case FeatureKind::nv: names.emplace_back("nv"); break;
      case FeatureKind::bow: names.emplace_back("bow"); break;
      case FeatureKind::clusters: {
        const auto k = full_model_ ? static_cast<int>(full_model_->k()) : options_.kmeans.k;
        for (int c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
        break;
      }
    }
  }
  return names;
}

ClusterModel CorpusFeatures::fit_clusters(std::span<const std::size_t> rows) const {
  std::vector<const Transcript*> subset;
  for (auto r : rows) subset.push_back(&transcripts_[r]);
  const auto vocab = cluster_vocabulary(subset, *options_.embeddings, options_.content);
  return fit_cluster_model(vocab, *options_.embeddings, options_.kmeans);
}

Eigen::MatrixXd CorpusFeatures::rows_for(std::span<const std::size_t> rows, const ClusterModel* model,
                                         const std::vector<std::string>* bow_vocab) const {
  std::vector<std::vector<double>> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& t = transcripts_[rows[i]];
    auto& row = out[i];
    for (auto k : kinds_) {
      switch (k) {
        case FeatureKind::pid:
          row.push_back(score_measure(t, options_.pid_measure, options_.pid_config).value);
          break;
        case FeatureKind::cpidr: row.push_back(cpidr_lite(t)); break;
        case FeatureKind::nv: row.push_back(nv_proportion(t, options_.content)); break;
        case FeatureKind::sid:
          row.push_back(sid_score(t, *model, *options_.embeddings, options_.icu_threshold, options_.content));
          break;
        case FeatureKind::clusters: {
          const auto cf = cluster_features(t, *model, *options_.embeddings, options_.content);
          row.insert(row.end(), cf.values.data(), cf.values.data() + cf.values.size());
          break;
        }
        case FeatureKind::bow: {
          const auto v = bow_features(t, *bow_vocab, options_.content);
          row.insert(row.end(), v.data(), v.data() + v.size());
          break;
        }
      }
    }
  }
  const auto cols = out.empty() ? 0 : out.front().size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out[i][j];
  return X;
}

FoldData CorpusFeatures::build(std::span<const std::size_t> train, std::span<const std::size_t> test) const {
  std::optional<ClusterModel> fold_model;
  const ClusterModel* model = full_model_ ? &*full_model_ : nullptr;
  if (needs_clusters() && options_.scope == ClusterScope::fold && !options_.fixed_model) {
    fold_model = fit_clusters(train);
    model = &*fold_model;
    if (audit_) {
      std::lock_guard lock(audit_mutex_);
      audit_(FoldAudit{{train.begin(), train.end()}, {test.begin(), test.end()}, fold_model->training_vocab});
    }
  }
  std::vector<std::string> bow_vocab;
  bool uses_bow = false;
  for (auto k : kinds_) uses_bow |= k == FeatureKind::bow;
  if (uses_bow) {
    std::vector<const Transcript*> subset;
    for (auto r : train) subset.push_back(&transcripts_[r]);
    bow_vocab = build_bow_vocabulary(subset, options_.bow_min_frequency, options_.content);
  }
  return {rows_for(train, model, &bow_vocab), rows_for(test, model, &bow_vocab)};
}

FeatureMatrix CorpusFeatures::full_matrix() const {
  std::vector<std::size_t> all(transcripts_.size());
  std::iota(all.begin(), all.end(), 0);
  const ClusterModel* model = full_model_ ? &*full_model_ : nullptr;
  std::optional<ClusterModel> fitted;
  if (needs_clusters() && !model) {
    fitted = fit_clusters(all);
    model = &*fitted;
  }
  std::vector<std::string> bow_vocab;
  FeatureMatrix m;
  bool uses_bow = false;
  for (auto k : kinds_) uses_bow |= k == FeatureKind::bow;
  if (uses_bow) {
    std::vector<const Transcript*> subset;
    for (const auto& t : transcripts_) subset.push_back(&t);
    bow_vocab = build_bow_vocabulary(subset, options_.bow_min_frequency, options_.content);
  }
  m.rows = rows_for(all, model, &bow_vocab);
  for (auto k : kinds_) {
    switch (k) {
      case FeatureKind::bow:
        for (const auto& w : bow_vocab) m.feature_names.push_back("bow:" + w);
        break;
      case FeatureKind::clusters:
        for (Eigen::Index c = 0; c < model->k(); ++c) m.feature_names.push_back("c" + std::to_string(c));
        break;
      case FeatureKind::pid: m.feature_names.emplace_back(to_string(options_.pid_measure)); break;
      case FeatureKind::cpidr: m.feature_names.emplace_back("cpidr-lite"); break;
      case FeatureKind::sid: m.feature_names.emplace_back("sid"); break;
      case FeatureKind::nv: m.feature_names.emplace_back("nv"); break;
    }
  }
  for (const auto& t : transcripts_) {
    m.sample_ids.push_back(t.sample_id);
    m.subject_ids.push_back(t.subject_id);
    m.labels.push_back(t.label);
  }
  return m;
}

}  // namespace idense
