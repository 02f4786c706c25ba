#include <gtest/gtest.h>

#include <filesystem>

#include "generators.hpp"
#include "prefnoise/errors.hpp"
#include "prefnoise/latent.hpp"

namespace prefnoise {
namespace {

EncoderConfig gridworld_encoder_config(int horizon = 16) {
  EncoderConfig cfg;
  cfg.input_dim = static_cast<std::size_t>(horizon) * 4;
  cfg.embedding_dim = 8;
  cfg.seed = 3;
  return cfg;
}

TEST(Encoder, ReconstructionImprovesOverInitialization) {
  const auto trajs = testing::gridworld_rollouts(500, 1, 16);
  const auto result = train_encoder_with_report(trajs, gridworld_encoder_config());
  EXPECT_LT(result.final_reconstruction, result.initial_reconstruction);
  EXPECT_TRUE(result.encoder.trained());
}

TEST(Encoder, DeterministicUnderSeed) {
  const auto trajs = testing::gridworld_rollouts(64, 2, 16);
  auto cfg = gridworld_encoder_config();
  cfg.epochs = 3;
  const auto a = train_encoder(trajs, cfg);
  const auto b = train_encoder(trajs, cfg);
  EXPECT_EQ(a.encoder_net().flat_parameters(), b.encoder_net().flat_parameters());
  EXPECT_EQ(a.decoder_net().flat_parameters(), b.decoder_net().flat_parameters());
}

TEST(Encoder, ConfigErrors) {
  auto cfg = gridworld_encoder_config();
  cfg.embedding_dim = cfg.input_dim;
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto trajs = testing::gridworld_rollouts(40, 2, 16);
  EXPECT_THROW(train_encoder(trajs, cfg), ConfigError);
}

TEST(Encoder, TooFewTrajectoriesThrow) {
  const auto trajs = testing::gridworld_rollouts(10, 2, 16);
  EXPECT_THROW(train_encoder(trajs, gridworld_encoder_config()), std::invalid_argument);
}

TEST(Encoder, EncodeIsDeterministicMean) {
  const auto enc = init_encoder(gridworld_encoder_config());
  const auto trajs = testing::gridworld_rollouts(3, 4, 16);
  const auto e1 = encode(enc, trajs[0]);
  EXPECT_EQ(e1.size(), 8u);
  EXPECT_EQ(encode(enc, trajs[0]), e1);
}

TEST(Encoder, DistanceProperties) {
  const auto enc = init_encoder(gridworld_encoder_config());
  const auto trajs = testing::gridworld_rollouts(20, 5, 16);
  EXPECT_EQ(embedding_distance(enc, trajs[0], trajs[0]), 0.0);
  for (std::size_t i = 1; i < trajs.size(); ++i) {
    EXPECT_EQ(embedding_distance(enc, trajs[0], trajs[i]),
              embedding_distance(enc, trajs[i], trajs[0]));
    EXPECT_GE(embedding_distance(enc, trajs[0], trajs[i]), 0.0);
  }
}

TEST(Encoder, DimensionMismatchThrows) {
  const auto enc = init_encoder(gridworld_encoder_config());
  const auto wrong = testing::gridworld_rollouts(1, 6, 10);
  EXPECT_THROW(encode(enc, wrong[0]), std::invalid_argument);
}

TEST(Encoder, SaveLoadRoundTrip) {
  const auto enc = init_encoder(gridworld_encoder_config());
  const auto path = (std::filesystem::temp_directory_path() / "prefnoise_encoder.txt").string();
  enc.save(path);
  const auto loaded = Encoder::load(path);
  const auto trajs = testing::gridworld_rollouts(2, 7, 16);
  EXPECT_EQ(encode(loaded, trajs[0]), encode(enc, trajs[0]));
  EXPECT_EQ(loaded.embedding_dim(), enc.embedding_dim());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace prefnoise
