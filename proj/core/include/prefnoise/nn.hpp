#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prefnoise/rng.hpp"

// Small dense networks with explicit forward/backward passes. Samples are stored
// column-wise: an input batch is (input_dim x batch).
namespace prefnoise::nn {

enum class Activation { identity, tanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::identity;
};

struct LayerGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};
using Gradients = std::vector<LayerGradient>;

/// Activations recorded by a forward pass; inputs[i] feeds layer i, outputs[i] is its
/// post-activation value.
struct Tape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> outputs;
};

class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases.
  Mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
      Activation hidden_activation, Activation output_activation, SeededRng& rng);
  explicit Mlp(std::vector<DenseLayer> layers);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Accumulates dL/dθ into `grads` given dL/d(output) and returns dL/d(input).
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                           Gradients& grads) const;

  Gradients zero_gradients() const;
  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);
  bool all_finite() const;

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  std::vector<DenseLayer> layers_;
};

/// Flattens gradients in the same order as Mlp::flat_parameters().
std::vector<double> flatten(const Gradients& grads);

enum class OptimizerKind { sgd, sgd_momentum, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizer with per-parameter state shaped like the network.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const OptimizerConfig& config, const Mlp& net);

  void step(Mlp& net, const Gradients& grads);

 private:
  OptimizerConfig config_;
  Gradients first_;
  Gradients second_;
  long steps_ = 0;
};

}  // namespace prefnoise::nn
