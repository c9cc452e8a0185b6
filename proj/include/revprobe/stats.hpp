#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace revprobe::stats {

/// 1-based ranks with ties assigned their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Product-moment correlation. Throws LengthMismatch, InsufficientData
/// (fewer than two points) or ZeroVariance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of the average-rank vectors.
double spearman(std::span<const double> x, std::span<const double> y);

/// Percentile value by linear interpolation between order statistics
/// (the "type 7" definition); `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap over `n` units: each resample draws n unit
/// indices with replacement (SplitMix64(seed)) and evaluates `statistic`.
Interval bootstrap_percentile(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                              std::size_t resamples, double level, std::uint64_t seed);

/// Percentile bootstrap interval of the mean.
Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed);

/// F1 of boolean predictions; 0 when nothing is predicted positive.
double f1(const std::vector<bool>& preds, const std::vector<bool>& labels);

/// Rank (Mann-Whitney) AUC with ties counted one half.
double auc(std::span<const double> scores, const std::vector<bool>& labels);

/// Dense non-negative rows x cols matrix.
class RewardMatrix {
 public:
  RewardMatrix() = default;
  RewardMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  explicit RewardMatrix(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, double v);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending by row
  double total = 0.0;
};

/// Maximum-weight one-to-one matching (Hungarian algorithm on the padded
/// square matrix). Pairs with zero reward are left unmatched.
Assignment max_weight_assignment(const RewardMatrix& m);

}  // namespace revprobe::stats
