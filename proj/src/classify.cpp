#include "idense/classify.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "idense/error.hpp"
#include "idense/io.hpp"
#include "idense/random.hpp"
#include "idense/stats.hpp"

namespace idense {

void FeatureMatrix::validate() const {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (sample_ids.size() != n || subject_ids.size() != n || labels.size() != n)
    throw ValidationError("feature matrix: ids/labels do not align with " + std::to_string(n) + " rows");
  if (feature_names.size() != static_cast<std::size_t>(rows.cols()))
    throw ValidationError("feature matrix: " + std::to_string(feature_names.size()) + " names for " +
                          std::to_string(rows.cols()) + " columns");
}

Eigen::VectorXd to_targets(std::span<const Label> labels) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i] == Label::patient;
  return y;
}

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double mean_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double s = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y(i) * z(i);
  return s / static_cast<double>(z.size());
}

// Smooth part: mean NLL + lambda (1 - alpha)/2 |w|^2.
struct SmoothPart {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  double l2;  // lambda (1 - alpha)

  double value(const Eigen::VectorXd& theta) const {
    const auto p = X.cols();
    const Eigen::VectorXd w = theta.head(p);
    return mean_nll(X, y, w, theta(p)) + 0.5 * l2 * w.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    const auto p = X.cols();
    const Eigen::VectorXd w = theta.head(p);
    Eigen::VectorXd r = (X * w).array() + theta(p);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(r(i)) - y(i);
    const double n = static_cast<double>(X.rows());
    Eigen::VectorXd g(p + 1);
    g.head(p) = X.transpose() * r / n + l2 * w;
    g(p) = r.sum() / n;
    return g;
  }
};

// Soft-thresholds the weights (not the intercept).
Eigen::VectorXd prox_l1(const Eigen::VectorXd& theta, double threshold) {
  Eigen::VectorXd out = theta;
  for (Eigen::Index j = 0; j + 1 < theta.size(); ++j) {
    const double v = theta(j);
    out(j) = v > threshold ? v - threshold : (v < -threshold ? v + threshold : 0.0);
  }
  return out;
}

}  // namespace

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                             double alpha, double lambda) {
  return mean_nll(X, y, w, b) + lambda * (alpha * w.lpNorm<1>() + 0.5 * (1.0 - alpha) * w.squaredNorm());
}

Eigen::VectorXd elastic_net_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                     double b, double alpha, double lambda) {
  SmoothPart smooth{X, y, lambda * (1.0 - alpha)};
  Eigen::VectorXd theta(w.size() + 1);
  theta << w, b;
  Eigen::VectorXd g = smooth.gradient(theta);
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) != 0) g(j) += lambda * alpha * (w(j) > 0 ? 1.0 : -1.0);
  return g;
}

Eigen::VectorXd LogisticModel::probability(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd z = (X * weights).array() + intercept;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
  return z;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, double lambda,
                           const FitOptions& options) {
  if (X.rows() != y.size()) throw ValidationError("fit_logistic: X and y differ in length");
  if (!X.allFinite()) throw ValidationError("fit_logistic: non-finite feature value");
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("fit_logistic: alpha must lie in [0, 1]");
  if (!(lambda >= 0)) throw ConfigError("fit_logistic: lambda must be non-negative");
  const double positives = y.sum();
  const double n = static_cast<double>(y.size());
  if (positives <= 0 || positives >= n) throw ValidationError("fit_logistic: training data has a single class");

  const auto p = X.cols();
  const double l1 = lambda * alpha;
  SmoothPart smooth{X, y, lambda * (1.0 - alpha)};
  auto full = [&](const Eigen::VectorXd& theta) { return smooth.value(theta) + l1 * theta.head(p).lpNorm<1>(); };

  // Lipschitz bound of the smooth gradient: |[X 1]|_2^2 / (4n) + l2.
  Eigen::MatrixXd Xa(X.rows(), p + 1);
  Xa << X, Eigen::VectorXd::Ones(X.rows());
  const double spectral = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Xa.transpose() * Xa).eigenvalues().maxCoeff();
  double L = std::max(1e-12, (spectral / (4.0 * n) + smooth.l2) / 8.0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p + 1);
  x(p) = std::log(positives / (n - positives));
  Eigen::VectorXd x_prev = x, yk = x;
  double F = full(x);
  double t = 1.0;

  LogisticModel model;
  if (options.record_trace) model.objective_trace.push_back(F);
  auto mapping_norm = [&](const Eigen::VectorXd& at) {
    const Eigen::VectorXd g = smooth.gradient(at);
    const Eigen::VectorXd step = prox_l1(at - g / L, l1 / L);
    return ((at - step) * L).lpNorm<Eigen::Infinity>();
  };

  if (mapping_norm(x) < options.tolerance) {
    model.converged = true;
  } else {
    for (int iter = 1; iter <= options.max_iter; ++iter) {
      const Eigen::VectorXd g = smooth.gradient(yk);
      const double fy = smooth.value(yk);
      Eigen::VectorXd z;
      for (;;) {
        z = prox_l1(yk - g / L, l1 / L);
        const Eigen::VectorXd d = z - yk;
        if (smooth.value(z) <= fy + g.dot(d) + 0.5 * L * d.squaredNorm() + 1e-15 * std::abs(fy)) break;
        L *= 2.0;
      }
      const double Fz = full(z);
      x_prev = x;
      if (Fz <= F) {
        x = z;
        F = Fz;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      yk = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
      model.iterations = iter;
      if (options.record_trace) model.objective_trace.push_back(F);
      if (mapping_norm(x) < options.tolerance) {
        model.converged = true;
        break;
      }
      // Momentum restart when the accelerated point stops helping.
      if (Fz > F) {
        yk = x;
        t = 1.0;
      }
    }
  }
  model.weights = x.head(p);
  model.intercept = x(p);
  return model;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.sd = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
    s.sd(j) = std::sqrt(var);
    if (s.sd(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j)))) s.kept.push_back(j);
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto j = kept[c];
    out.col(static_cast<Eigen::Index>(c)) = (X.col(j).array() - mean(j)) / sd(j);
  }
  return out;
}

std::vector<std::vector<std::size_t>> grouped_kfold(std::span<const std::string> subject_ids,
                                                    std::span<const Label> labels, int k, std::uint64_t seed,
                                                    bool stratify) {
  if (subject_ids.size() != labels.size()) throw ValidationError("grouped_kfold: ids and labels differ in length");
  if (k < 2) throw ConfigError("grouped_kfold: need at least 2 folds");
  // Subject label = label of its first sample.
  std::map<std::string, Label> subject_label;
  for (std::size_t i = 0; i < subject_ids.size(); ++i) subject_label.emplace(subject_ids[i], labels[i]);
  if (subject_label.size() < static_cast<std::size_t>(k))
    throw ValidationError("grouped_kfold: " + std::to_string(subject_label.size()) + " subjects is fewer than " +
                          std::to_string(k) + " folds");

  Rng rng(seed);
  std::vector<std::string> order;
  if (stratify) {
    std::vector<std::string> patients, controls;
    for (const auto& [s, l] : subject_label) (l == Label::patient ? patients : controls).push_back(s);
    rng.shuffle(patients);
    rng.shuffle(controls);
    order = std::move(patients);
    order.insert(order.end(), controls.begin(), controls.end());
  } else {
    for (const auto& [s, _] : subject_label) order.push_back(s);
    rng.shuffle(order);
  }
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % static_cast<std::size_t>(k);

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < subject_ids.size(); ++i) folds[fold_of[subject_ids[i]]].push_back(i);
  return folds;
}

namespace {

// Exact non-negative fraction with 128-bit intermediates.
struct Fraction {
  __int128 num = 0;
  __int128 den = 1;

  static __int128 gcd(__int128 a, __int128 b) {
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  static Fraction of(__int128 n, __int128 d) {
    if (d == 0 || n == 0) return {0, 1};
    const auto g = gcd(n, d);
    return {n / g, d / g};
  }
  Fraction operator+(const Fraction& o) const { return of(num * o.den + o.num * den, den * o.den); }
  Fraction operator*(const Fraction& o) const { return of(num * o.num, den * o.den); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

PrfScores weighted_prf(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) throw ValidationError("weighted_prf: length mismatch");
  if (y_true.empty()) throw InsufficientDataError("weighted_prf: no samples");
  const auto n = static_cast<std::int64_t>(y_true.size());
  Fraction precision, recall, f;
  for (Label c : {Label::patient, Label::control}) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c, p = y_pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const std::int64_t support = tp + fn;
    if (support == 0) continue;
    const auto weight = Fraction::of(support, n);
    precision = precision + weight * Fraction::of(tp, tp + fp);
    recall = recall + weight * Fraction::of(tp, support);
    f = f + weight * Fraction::of(2 * tp, 2 * tp + fp + fn);
  }
  return {precision.value(), recall.value(), f.value()};
}

void ClassifierConfig::validate() const {
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("alpha must lie in [0, 1]");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  for (double l : lambda_grid)
    if (!(l > 0)) throw ConfigError("lambda grid values must be positive");
  if (inner_folds < 2) throw ConfigError("inner folds must be at least 2");
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

StaticFeatures::StaticFeatures(FeatureMatrix matrix) : matrix_(std::move(matrix)) { matrix_.validate(); }

FoldData StaticFeatures::build(std::span<const std::size_t> train, std::span<const std::size_t> test) const {
  return {select_rows(matrix_.rows, train), select_rows(matrix_.rows, test)};
}

namespace {

template <typename T>
std::vector<T> pick(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd pick(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

bool both_classes(const Eigen::VectorXd& y) {
  const double s = y.sum();
  return s > 0 && s < static_cast<double>(y.size());
}

double log_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& y) {
  constexpr double eps = 1e-15;
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = std::clamp(prob(i), eps, 1.0 - eps);
    s -= y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
  }
  return s;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& fold) {
  std::vector<bool> in(n, false);
  for (auto i : fold) in[i] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

std::vector<Label> predict(const LogisticModel& model, const Eigen::MatrixXd& X) {
  const auto p = model.probability(X);
  std::vector<Label> out;
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p(i) >= 0.5 ? Label::patient : Label::control);
  return out;
}

MetricSummary summarise(const std::vector<double>& v) { return {mean(v), sample_sd(v)}; }

}  // namespace

double select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::string> subject_ids,
                     std::span<const Label> labels, const ClassifierConfig& config, std::uint64_t seed) {
  if (config.lambda_grid.size() == 1) return config.lambda_grid.front();
  std::set<std::string> subjects(subject_ids.begin(), subject_ids.end());
  const int k = std::min<int>(config.inner_folds, static_cast<int>(subjects.size()));
  if (k < 2) return config.lambda_grid[config.lambda_grid.size() / 2];
  const auto folds = grouped_kfold(subject_ids, labels, k, seed, config.stratify);
  const auto n = static_cast<std::size_t>(X.rows());

  double best_loss = std::numeric_limits<double>::infinity();
  double best = config.lambda_grid[config.lambda_grid.size() / 2];
  for (double lambda : config.lambda_grid) {
    double loss = 0;
    std::size_t scored = 0;
    for (const auto& fold : folds) {
      if (fold.empty()) continue;
      const auto train = complement(n, fold);
      const Eigen::VectorXd ytr = pick(y, train);
      if (!both_classes(ytr)) continue;
      const auto model = fit_logistic(select_rows(X, train), ytr, config.alpha, lambda, config.fit);
      loss += log_loss(model.probability(select_rows(X, fold)), pick(y, fold));
      scored += fold.size();
    }
    if (scored == 0) continue;
    const double mean_loss = loss / static_cast<double>(scored);
    if (mean_loss < best_loss) {
      best_loss = mean_loss;
      best = lambda;
    }
  }
  return best;
}

EvalReport evaluate(const FeatureSource& features, const ClassifierConfig& config) {
  config.validate();
  const auto n = features.size();
  const auto& subjects = features.subject_ids();
  const auto& labels = features.labels();
  const Eigen::VectorXd y = to_targets(labels);

  std::vector<PrfScores> per_repeat(static_cast<std::size_t>(config.repeats));
  auto run_repeat = [&](int r) {
    const auto folds = grouped_kfold(subjects, labels, config.folds,
                                     derive_seed(config.seed, SeedStream::fold_assignment, static_cast<std::uint64_t>(r)),
                                     config.stratify);
    std::vector<Label> predicted(n, Label::control);
    std::vector<PrfScores> fold_scores;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& test = folds[f];
      if (test.empty()) continue;
      try {
        const auto train = complement(n, test);
        auto data = features.build(train, test);
        const Eigen::VectorXd ytr = pick(y, train);
        if (config.standardize) {
          const auto scaler = Standardizer::fit(data.train);
          data.train = scaler.transform(data.train);
          data.test = scaler.transform(data.test);
        }
        const auto train_subjects = pick<std::string>(subjects, train);
        const auto train_labels = pick<Label>(labels, train);
        const auto inner_seed = derive_seed(config.seed, SeedStream::inner_folds,
                                            static_cast<std::uint64_t>(r) * 1000003ULL + f);
        const double lambda = select_lambda(data.train, ytr, train_subjects, train_labels, config, inner_seed);
        const auto model = fit_logistic(data.train, ytr, config.alpha, lambda, config.fit);
        const auto pred = predict(model, data.test);
        for (std::size_t i = 0; i < test.size(); ++i) predicted[test[i]] = pred[i];
        if (config.pooling == MetricPooling::fold_mean)
          fold_scores.push_back(weighted_prf(pick<Label>(labels, test), pred));
      } catch (const Error& e) {
        throw ValidationError("repeat " + std::to_string(r) + ", fold " + std::to_string(f) + ": " + e.what());
      }
    }
    if (config.pooling == MetricPooling::pooled) {
      per_repeat[static_cast<std::size_t>(r)] = weighted_prf(labels, predicted);
    } else {
      PrfScores m;
      for (const auto& s : fold_scores) {
        m.precision += s.precision / static_cast<double>(fold_scores.size());
        m.recall += s.recall / static_cast<double>(fold_scores.size());
        m.f_score += s.f_score / static_cast<double>(fold_scores.size());
      }
      per_repeat[static_cast<std::size_t>(r)] = m;
    }
  };

  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, config.repeats);
  if (threads == 1) {
    for (int r = 0; r < config.repeats; ++r) run_repeat(r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next++; r < config.repeats; r = next++) {
          try {
            run_repeat(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvalReport report;
  report.per_repeat = per_repeat;
  report.feature_names = features.feature_names();
  report.config = config;
  std::vector<double> p, rc, f;
  for (const auto& s : per_repeat) {
    p.push_back(s.precision);
    rc.push_back(s.recall);
    f.push_back(s.f_score);
  }
  report.precision = summarise(p);
  report.recall = summarise(rc);
  report.f_score = summarise(f);
  return report;
}

EvalReport evaluate(const FeatureMatrix& features, const ClassifierConfig& config) {
  return evaluate(StaticFeatures(features), config);
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  auto summary = [](const MetricSummary& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; };
  json j;
  j["precision"] = summary(report.precision);
  j["recall"] = summary(report.recall);
  j["f_score"] = summary(report.f_score);
  auto& per = j["per_repeat"] = json::array();
  for (const auto& s : report.per_repeat)
    per.push_back({{"precision", s.precision}, {"recall", s.recall}, {"f_score", s.f_score}});
  const auto& c = report.config;
  j["config"] = {{"alpha", c.alpha},
                 {"lambda_grid", c.lambda_grid},
                 {"folds", c.folds},
                 {"repeats", c.repeats},
                 {"seed", c.seed},
                 {"standardize", c.standardize},
                 {"stratify", c.stratify},
                 {"inner_folds", c.inner_folds},
                 {"pooling", c.pooling == MetricPooling::pooled ? "pooled" : "fold-mean"},
                 {"tolerance", c.fit.tolerance},
                 {"max_iter", c.fit.max_iter},
                 {"features", report.feature_names}};
  return j.dump(2) + "\n";
}

std::string report_table_header() {
  return "features,precision_mean,precision_sd,recall_mean,recall_sd,f_score_mean,f_score_sd\n";
}

std::string report_table_row(const EvalReport& report, std::string_view feature_label) {
  return io::csv_row({std::string(feature_label), io::format_fixed(report.precision.mean),
                      io::format_fixed(report.precision.sd), io::format_fixed(report.recall.mean),
                      io::format_fixed(report.recall.sd), io::format_fixed(report.f_score.mean),
                      io::format_fixed(report.f_score.sd)});
}

}  // namespace idense
