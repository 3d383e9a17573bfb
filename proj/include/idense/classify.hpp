#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idense/corpus.hpp"

namespace idense {

/// Per-sample feature rows aligned with sample ids, subject ids and labels.
struct FeatureMatrix {
  Eigen::MatrixXd rows;
  std::vector<std::string> feature_names;
  std::vector<std::string> sample_ids;
  std::vector<std::string> subject_ids;
  std::vector<Label> labels;

  Eigen::Index size() const { return rows.rows(); }
  /// Throws ValidationError when the columns are misaligned.
  void validate() const;
};

/// 1 for patient, 0 for control.
Eigen::VectorXd to_targets(std::span<const Label> labels);

// ---------------------------------------------------------------------------
// Elastic-net logistic regression
//
// minimise  mean_i [log(1 + exp(z_i)) - y_i z_i] + lambda * (alpha |w|_1 + (1 - alpha)/2 |w|_2^2)
// with z = X w + b. The intercept is not penalised.
// ---------------------------------------------------------------------------

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                             double alpha, double lambda);

/// Gradient with respect to (w, b), intercept last. The L1 term contributes
/// lambda * alpha * sign(w_j), which is the derivative wherever w_j != 0.
Eigen::VectorXd elastic_net_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                     double b, double alpha, double lambda);

struct FitOptions {
  /// Stop when the max-norm of the proximal gradient mapping falls below this.
  double tolerance = 1e-6;
  int max_iter = 10000;
  bool record_trace = false;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective at the start and after each iteration (only when FitOptions::record_trace).
  std::vector<double> objective_trace;

  Eigen::VectorXd probability(const Eigen::MatrixXd& X) const;
};

/// Monotone accelerated proximal gradient (MFISTA) with backtracking.
/// Needs both classes present and finite features.
LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, double lambda,
                           const FitOptions& options = {});

/// Column standardisation fit on training rows; zero-variance columns are dropped.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<Eigen::Index> kept;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
};

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// k folds of sample indices. All samples of a subject share a fold. Subjects are shuffled
/// (within each label when `stratify`) and dealt round-robin, patients first.
std::vector<std::vector<std::size_t>> grouped_kfold(std::span<const std::string> subject_ids,
                                                    std::span<const Label> labels, int k, std::uint64_t seed,
                                                    bool stratify = true);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

/// Per-class precision/recall/F averaged with weights equal to true-class support. Computed
/// in exact rational arithmetic, so weighted recall equals accuracy bit for bit.
PrfScores weighted_prf(std::span<const Label> y_true, std::span<const Label> y_pred);

enum class MetricPooling { pooled, fold_mean };

struct ClassifierConfig {
  double alpha = 0.5;
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  int folds = 10;
  int repeats = 100;
  std::uint64_t seed = 0;
  bool standardize = true;
  bool stratify = true;
  int inner_folds = 5;
  MetricPooling pooling = MetricPooling::pooled;
  /// Worker threads for repeats; 0 = hardware concurrency.
  int threads = 0;
  FitOptions fit;

  void validate() const;
};

struct FoldData {
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
};

/// Produces the train/test design matrices of one fold. Implementations must be safe to call
/// concurrently.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t size() const = 0;
  virtual const std::vector<std::string>& subject_ids() const = 0;
  virtual const std::vector<Label>& labels() const = 0;
  virtual std::vector<std::string> feature_names() const = 0;
  virtual FoldData build(std::span<const std::size_t> train, std::span<const std::size_t> test) const = 0;
};

/// Feature rows that do not depend on the fold.
class StaticFeatures : public FeatureSource {
 public:
  explicit StaticFeatures(FeatureMatrix matrix);

  std::size_t size() const override { return static_cast<std::size_t>(matrix_.size()); }
  const std::vector<std::string>& subject_ids() const override { return matrix_.subject_ids; }
  const std::vector<Label>& labels() const override { return matrix_.labels; }
  std::vector<std::string> feature_names() const override { return matrix_.feature_names; }
  FoldData build(std::span<const std::size_t> train, std::span<const std::size_t> test) const override;

 private:
  FeatureMatrix matrix_;
};

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct EvalReport {
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f_score;
  std::vector<PrfScores> per_repeat;
  std::vector<std::string> feature_names;
  ClassifierConfig config;
};

/// Repeated subject-grouped k-fold CV. Each repeat draws a fresh fold assignment; lambda is
/// chosen per outer fold by inner grouped CV (held-out log-loss) on the training part.
EvalReport evaluate(const FeatureSource& features, const ClassifierConfig& config);
EvalReport evaluate(const FeatureMatrix& features, const ClassifierConfig& config);

/// Lambda with the lowest mean held-out log-loss under inner grouped CV.
double select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::string> subject_ids,
                     std::span<const Label> labels, const ClassifierConfig& config, std::uint64_t seed);

/// JSON: {"precision": {"mean", "sd"}, "recall": ..., "f_score": ..., "per_repeat": [...], "config": {...}}.
std::string report_to_json(const EvalReport& report);

/// Table row header: features,precision_mean,precision_sd,recall_mean,recall_sd,f_score_mean,f_score_sd
std::string report_table_header();
std::string report_table_row(const EvalReport& report, std::string_view feature_label);

}  // namespace idense
