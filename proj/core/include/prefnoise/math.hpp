#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace prefnoise {

/// Smoothing applied to one-hot label distributions so KL stays finite.
inline constexpr double kLabelSmoothing = 1e-6;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

/// KL(q || p) for Bernoulli distributions (q, 1-q) and (p, 1-p), natural log.
/// 0 log 0 is taken as 0.
inline double bernoulli_kl(double q, double p) {
  double kl = 0.0;
  if (q > 0.0) kl += q * (std::log(q) - std::log(p));
  if (q < 1.0) kl += (1.0 - q) * (std::log1p(-q) - std::log1p(-p));
  return kl;
}

/// Index permutation sorting `scores` ascending, ties broken by ascending index.
inline std::vector<std::size_t> argsort_stable(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

/// Replaces each score by its rank / (n - 1), ties broken by index. n == 1 maps to 0.
inline std::vector<double> rank_normalize(std::span<const double> scores) {
  const auto order = argsort_stable(scores);
  std::vector<double> out(scores.size(), 0.0);
  if (scores.size() < 2) return out;
  const double denom = static_cast<double>(scores.size() - 1);
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = static_cast<double>(r) / denom;
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 when n < 2
  std::size_t n = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  out.n = xs.size();
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return out;
}

}  // namespace prefnoise
