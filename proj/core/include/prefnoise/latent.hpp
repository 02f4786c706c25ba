#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/nn.hpp"

namespace prefnoise {

struct EncoderConfig {
  std::size_t input_dim = 80;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> hidden_dims = {64};
  double learning_rate = 1e-4;
  int epochs = 50;
  std::size_t batch_size = 32;
  double kl_weight = 1.0;
  double reconstruction_weight = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Dense variational autoencoder over flattened trajectories. The encoder head emits
/// [mean | log-variance]; embeddings are the posterior mean.
class Encoder {
 public:
  Encoder(nn::Mlp encoder, nn::Mlp decoder, std::size_t embedding_dim, bool trained);

  std::size_t input_dim() const { return encoder_.input_dim(); }
  std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  bool trained() const noexcept { return trained_; }
  const nn::Mlp& encoder_net() const noexcept { return encoder_; }
  const nn::Mlp& decoder_net() const noexcept { return decoder_; }

  /// Posterior mean for a flattened trajectory. Throws std::invalid_argument on a
  /// dimension mismatch.
  std::vector<double> embed(std::span<const double> features) const;

  /// Mean over rows of Σ_j (x̂_j - x_j)^2, decoding from the posterior mean.
  double reconstruction_loss(std::span<const std::vector<double>> rows) const;

  void save(const std::string& path) const;
  static Encoder load(const std::string& path);

 private:
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  std::size_t embedding_dim_;
  bool trained_;
};

/// Randomly initialized (untrained) encoder for the given configuration.
Encoder init_encoder(const EncoderConfig& cfg);

struct EncoderTraining {
  Encoder encoder;
  double initial_reconstruction = 0.0;
  double final_reconstruction = 0.0;
};

/// Plain SGD on reconstruction_weight * Σ(x̂ - x)^2 + kl_weight * KL(q(z|x) || N(0, I)),
/// batch-averaged, with reparameterized samples. Throws ConfigError on an invalid
/// configuration and std::invalid_argument when fewer than batch_size trajectories
/// are supplied.
EncoderTraining train_encoder_with_report(std::span<const Trajectory> trajs,
                                          const EncoderConfig& cfg);
Encoder train_encoder(std::span<const Trajectory> trajs, const EncoderConfig& cfg);

std::vector<double> encode(const Encoder& enc, const Trajectory& traj);

/// L2 distance between the two embeddings.
double embedding_distance(const Encoder& enc, const Trajectory& a, const Trajectory& b);

}  // namespace prefnoise
