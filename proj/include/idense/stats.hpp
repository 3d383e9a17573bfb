#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idense/corpus.hpp"

namespace idense {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Needs |x| = |y| >= 3 and non-constant inputs.
double spearman(std::span<const double> x, std::span<const double> y);

struct RankSumResult {
  /// Sum of the ranks of the first sample in the pooled ranking.
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

/// Number of ways to choose `m` of the ranks 1..n with each possible sum; index = sum.
std::vector<std::uint64_t> rank_sum_counts(std::size_t m, std::size_t n);

/// Two-sided Wilcoxon rank-sum test. Exact (enumerated null distribution) when
/// |a| + |b| <= 20 and there are no ties; otherwise the normal approximation with tie
/// and continuity corrections.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

inline constexpr double kSignificanceLevel = 0.001;

struct GroupSummary {
  std::string measure;
  double patient_mean = 0.0;
  double patient_sd = 0.0;
  std::size_t patient_n = 0;
  double control_mean = 0.0;
  double control_sd = 0.0;
  std::size_t control_n = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.001
};

double mean(std::span<const double> v);
/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_sd(std::span<const double> v);

/// Per-group mean and sd over samples with a rank-sum test of patients against controls.
GroupSummary group_summary(std::span<const double> values, std::span<const Label> labels, std::string measure);

}  // namespace idense
