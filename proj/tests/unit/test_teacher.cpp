#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise {
namespace {

using testing::pair_with_returns;

TEST(OracleProb, Examples) {
  EXPECT_DOUBLE_EQ(oracle_prob(pair_with_returns(3.0, 3.0), 1.0), 0.5);
  EXPECT_NEAR(oracle_prob(pair_with_returns(2.0, 1.0), 1.0), 0.731059, 1e-6);
}

TEST(OracleProb, ComplementUnderSwap) {
  SeededRng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto pair = testing::random_pair(rng, static_cast<std::uint64_t>(i));
    EXPECT_NEAR(oracle_prob(pair, 1.0) + oracle_prob(pair.swapped(), 1.0), 1.0, 1e-12);
  }
}

TEST(OracleProb, ExtremeReturnsStayInRange) {
  const double p = oracle_prob(pair_with_returns(800.0, -800.0), 1.0);
  EXPECT_LE(p, 1.0);
  EXPECT_GT(p, 0.0);
}

TEST(OracleLabel, Cases) {
  EXPECT_EQ(oracle_label(pair_with_returns(2.0, 1.0), 1.0), PreferenceLabel::first);
  EXPECT_EQ(oracle_label(pair_with_returns(1.0, 2.0), 1.0), PreferenceLabel::second);
  EXPECT_FALSE(oracle_label(pair_with_returns(3.0, 3.0), 1.0).has_value());
}

TEST(OracleLabel, TieBand) {
  EXPECT_FALSE(oracle_label(pair_with_returns(1.05, 1.0), 1.0, 0.1).has_value());
  EXPECT_TRUE(oracle_label(pair_with_returns(1.2, 1.0), 1.0, 0.1).has_value());
}

TEST(LabelWithOracle, DropsTies) {
  std::vector<TrajectoryPair> pairs{pair_with_returns(1, 2, 0), pair_with_returns(3, 3, 1),
                                    pair_with_returns(4, 0, 2)};
  const auto labelled = label_with_oracle(pairs, 1.0);
  ASSERT_EQ(labelled.size(), 2u);
  EXPECT_EQ(labelled[0].observed, PreferenceLabel::second);
  EXPECT_EQ(labelled[1].observed, PreferenceLabel::first);
  for (const auto& s : labelled) {
    EXPECT_FALSE(s.flipped);
    EXPECT_EQ(s.observed, s.ground_truth);
  }
}

TEST(NoisyLabel, Limits) {
  SeededRng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto keep = noisy_label(pair_with_returns(2, 1), 0.0, PreferenceLabel::first, rng);
    EXPECT_EQ(keep.observed, PreferenceLabel::first);
    EXPECT_FALSE(keep.flipped);
    const auto flip = noisy_label(pair_with_returns(2, 1), 1.0, PreferenceLabel::first, rng);
    EXPECT_EQ(flip.observed, PreferenceLabel::second);
    EXPECT_TRUE(flip.flipped);
    EXPECT_EQ(flip.flip_prob, 1.0);
  }
}

TEST(NoisyLabel, EmpiricalFlipFraction) {
  SeededRng rng(2024);
  const auto pair = pair_with_returns(2, 1);
  const std::size_t n = 10000;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < n; ++i) {
    flips += noisy_label(pair, 0.3, PreferenceLabel::first, rng).flipped ? 1 : 0;
  }
  const double rate = static_cast<double>(flips) / static_cast<double>(n);
  EXPECT_NEAR(rate, 0.3, 0.01);
}

TEST(NoisyLabel, MixtureIdentityWithinThreeSigma) {
  SeededRng rng(77);
  const auto pair = pair_with_returns(0, 1);
  for (double p : {0.05, 0.2, 0.5, 0.8}) {
    const std::size_t n = 20000;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = noisy_label(pair, p, PreferenceLabel::second, rng);
      agree += s.observed == PreferenceLabel::second ? 1 : 0;
    }
    const double frac = static_cast<double>(agree) / static_cast<double>(n);
    EXPECT_NEAR(frac, 1.0 - p, 3.0 * testing::proportion_sigma(p, n)) << "p=" << p;
  }
}

TEST(NoisyLabel, RejectsOutOfRange) {
  SeededRng rng(0);
  EXPECT_THROW(noisy_label(pair_with_returns(1, 0), -0.1, PreferenceLabel::first, rng),
               std::invalid_argument);
  EXPECT_THROW(noisy_label(pair_with_returns(1, 0), 1.1, PreferenceLabel::first, rng),
               std::invalid_argument);
}

TEST(LabeledPreference, FlipInvariant) {
  const auto s = LabeledPreference::clean(pair_with_returns(1, 0), PreferenceLabel::first);
  const auto f = s.with_flip(true, 0.4);
  EXPECT_TRUE(f.flipped);
  EXPECT_EQ(f.observed, reversed(f.ground_truth));
  EXPECT_EQ(f.flip_prob, 0.4);
  EXPECT_EQ(f.with_flip(false, 0.0).observed, f.ground_truth);
}

TEST(RealizedFlipRate, CountsDisagreements) {
  std::vector<LabeledPreference> batch;
  for (int i = 0; i < 10; ++i) {
    batch.push_back(LabeledPreference::clean(pair_with_returns(1, 0, static_cast<std::uint64_t>(i)),
                                             PreferenceLabel::first)
                        .with_flip(i < 3, 0.0));
  }
  EXPECT_DOUBLE_EQ(realized_flip_rate(batch), 0.3);
  EXPECT_EQ(realized_flip_rate({}), 0.0);
}

}  // namespace
}  // namespace prefnoise
