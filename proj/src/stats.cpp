#include "idense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idense/error.hpp"

namespace idense {

std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InsufficientDataError("spearman: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  if (x.size() < 3) throw InsufficientDataError("spearman: need at least 3 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw UndefinedCorrelationError("spearman: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::uint64_t> rank_sum_counts(std::size_t m, std::size_t n) {
  // counts[j][s]: subsets of size j of the ranks seen so far with sum s.
  const std::size_t max_sum = n * (n + 1) / 2;
  std::vector<std::vector<std::uint64_t>> counts(m + 1, std::vector<std::uint64_t>(max_sum + 1, 0));
  counts[0][0] = 1;
  for (std::size_t r = 1; r <= n; ++r)
    for (std::size_t j = std::min(m, r); j >= 1; --j)
      for (std::size_t s = max_sum; s >= r; --s) counts[j][s] += counts[j - 1][s - r];
  return counts[m];
}

namespace {

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("rank-sum test: both samples must be non-empty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  const auto m = a.size();
  const auto n = pooled.size();

  RankSumResult result;
  result.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(m), 0.0);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }

  if (n <= 20 && !ties) {
    const auto counts = rank_sum_counts(m, n);
    const auto w = static_cast<std::size_t>(std::llround(result.statistic));
    std::uint64_t total = 0, lower = 0, upper = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (s <= w) lower += counts[s];
      if (s >= w) upper += counts[s];
    }
    const double p = 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total);
    result.p_value = std::min(1.0, p);
    result.exact = true;
    return result;
  }

  const double dm = static_cast<double>(m), dn = static_cast<double>(n), db = dn - dm;
  const double expected = dm * (dn + 1.0) / 2.0;
  const double variance = dm * db / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (variance <= 0) {
    result.p_value = 1.0;
    return result;
  }
  const double diff = std::abs(result.statistic - expected);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(variance);
  result.p_value = std::min(1.0, 2.0 * normal_upper_tail(z));
  return result;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

GroupSummary group_summary(std::span<const double> values, std::span<const Label> labels, std::string measure) {
  if (values.size() != labels.size()) throw ValidationError("group_summary: values and labels differ in length");
  std::vector<double> patients, controls;
  for (std::size_t i = 0; i < values.size(); ++i)
    (labels[i] == Label::patient ? patients : controls).push_back(values[i]);
  if (patients.empty() || controls.empty())
    throw InsufficientDataError("group_summary '" + measure + "': both classes need at least one sample");

  GroupSummary g;
  g.measure = std::move(measure);
  g.patient_mean = mean(patients);
  g.patient_sd = sample_sd(patients);
  g.patient_n = patients.size();
  g.control_mean = mean(controls);
  g.control_sd = sample_sd(controls);
  g.control_n = controls.size();
  const auto test = wilcoxon_rank_sum(patients, controls);
  g.statistic = test.statistic;
  g.p_value = test.p_value;
  g.significant = g.p_value < kSignificanceLevel;
  return g;
}

}  // namespace idense
