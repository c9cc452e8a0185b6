#include "revprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "revprobe/error.hpp"
#include "revprobe/rng.hpp"

namespace revprobe::stats {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw Error(ErrorCode::InsufficientData, "correlation needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "a correlated variable is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InsufficientData, "quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_percentile(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                              std::size_t resamples, double level, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InsufficientData, "bootstrap over an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  if (resamples == 0) throw Error(ErrorCode::InvalidArgument, "resamples must be positive");
  SplitMix64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::vector<double> stats;
  stats.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    stats.push_back(statistic(idx));
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 0.5 * (1.0 - level);
  return {quantile_sorted(stats, alpha), quantile_sorted(stats, 1.0 - alpha)};
}

Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
  return bootstrap_percentile(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (auto i : idx) s += values[i];
        return s / static_cast<double>(idx.size());
      },
      resamples, level, seed);
}

double f1(const std::vector<bool>& preds, const std::vector<bool>& labels) {
  if (preds.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " vs " + std::to_string(labels.size()));
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] && labels[i]) ++tp;
    else if (preds[i]) ++fp;
    else if (labels[i]) ++fn;
  }
  if (tp + fn == 0) throw Error(ErrorCode::NoPositives, "no positive labels");
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " vs " + std::to_string(labels.size()));
  for (double s : scores)
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteInput, "non-finite score");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (labels[i]) {
      rank_sum += ranks[i];
      ++pos;
    }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::OneClassOnly, "AUC needs both classes");
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

RewardMatrix::RewardMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) set(r, c, fill);
}

RewardMatrix::RewardMatrix(const std::vector<std::vector<double>>& rows)
    : RewardMatrix(rows.size(), rows.empty() ? 0 : rows.front().size()) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols_) throw Error(ErrorCode::LengthMismatch, "ragged reward matrix");
    for (std::size_t c = 0; c < cols_; ++c) set(r, c, rows[r][c]);
  }
}

void RewardMatrix::set(std::size_t r, std::size_t c, double v) {
  if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "rewards must be finite and >= 0");
  values_[r * cols_ + c] = v;
}

Assignment max_weight_assignment(const RewardMatrix& m) {
  Assignment out;
  const std::size_t n = std::max(m.rows(), m.cols());
  if (n == 0) return out;
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < m.rows() && j < m.cols()) ? -m(i, j) : 0.0;
  };

  // Shortest augmenting path with potentials, 1-based; row_of[j] is the
  // row matched to column j.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = row_of[j] - 1;
    const std::size_t c = j - 1;
    if (r < m.rows() && c < m.cols() && m(r, c) > 0.0) {
      out.pairs.emplace_back(r, c);
      out.total += m(r, c);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

}  // namespace revprobe::stats
