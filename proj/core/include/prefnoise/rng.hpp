#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace prefnoise {

/// Seeded pseudo-random stream. Every stochastic operation in the library takes one
/// of these explicitly so runs are pure functions of (inputs, seed).
///
/// `split(k)` derives an independent child stream from the *seed* (not the current
/// engine state), so child streams do not depend on how much the parent consumed.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  SeededRng split(std::uint64_t stream) const;

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  /// True with probability p; p <= 0 never fires, p >= 1 always does.
  bool bernoulli(double p);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace prefnoise
