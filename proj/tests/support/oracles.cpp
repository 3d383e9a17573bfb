#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace idense::testing {

std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i] && j != i) ++equal;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double brute_force_rank_sum_p(int n, unsigned mask) {
  const int m = __builtin_popcount(mask);
  int observed = 0;
  for (int i = 0; i < n; ++i)
    if (mask >> i & 1u) observed += i + 1;
  long long lower = 0, upper = 0, total = 0;
  for (unsigned other = 0; other < (1u << n); ++other) {
    if (__builtin_popcount(other) != m) continue;
    int sum = 0;
    for (int i = 0; i < n; ++i)
      if (other >> i & 1u) sum += i + 1;
    ++total;
    lower += sum <= observed;
    upper += sum >= observed;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total));
}

double exhaustive_two_means(const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& p) {
  const auto n = p.rows();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    double sse = 0;
    for (unsigned side = 0; side < 2; ++side) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if ((mask >> i & 1u) == side) {
          mean += p.row(i);
          ++count;
        }
      if (count == 0) continue;
      mean /= count;
      for (Eigen::Index i = 0; i < n; ++i)
        if ((mask >> i & 1u) == side) sse += (p.row(i) - mean).squaredNorm();
    }
    best = std::min(best, sse);
  }
  return best;
}

void symmetric_design(int n, int positives, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  X.resize(2 * n, 1);
  y.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    y(i) = i < positives ? 1 : 0;
    X(n + i, 0) = -1;
    y(n + i) = i < n - positives ? 1 : 0;
  }
}

StudyDesign report_design(int subjects) {
  StudyDesign d;
  d.subjects = subjects;
  d.samples_per_subject = 1;
  d.words_per_sample = 120;
  d.patient_mean = 0.30;
  d.control_mean = 0.40;
  d.seed = 7;
  return d;
}

std::vector<std::string> golden_stats_args(const std::filesystem::path& manifest, const std::filesystem::path& out) {
  return {"stats", "--manifest", manifest.string(), "--measures", "cpidr-lite,depid,depid-r", "--out", out.string()};
}

std::vector<std::string> golden_classify_args(const std::filesystem::path& manifest, const std::filesystem::path& out) {
  return {"classify", "--manifest", manifest.string(), "--features", "pid", "--measure", "depid", "--repeats", "5",
          "--folds", "4", "--seed", "11", "--threads", "2", "--out", out.string()};
}

}  // namespace idense::testing
