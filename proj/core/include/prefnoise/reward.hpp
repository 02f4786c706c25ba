#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prefnoise/env.hpp"
#include "prefnoise/nn.hpp"
#include "prefnoise/rng.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise {

/// Probability clamp used by the cross-entropy loss.
inline constexpr double kProbabilityClamp = 1e-7;

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  int epochs_per_update = 50;
  std::size_t ensemble_size = 3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64};
  nn::OptimizerKind optimizer = nn::OptimizerKind::sgd_momentum;
  double momentum = 0.9;

  void validate() const;
};

/// r̂(s, a) in [-1, 1]: dense tanh network with a tanh-bounded scalar output.
class RewardNet {
 public:
  RewardNet(std::size_t state_dim, std::size_t action_dim, std::span<const std::size_t> hidden,
            SeededRng& rng);
  RewardNet(std::size_t state_dim, std::size_t action_dim, nn::Mlp mlp);

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  const nn::Mlp& mlp() const noexcept { return mlp_; }
  nn::Mlp& mlp() noexcept { return mlp_; }

  double reward(std::span<const double> state, std::span<const double> action) const;
  /// r̂ for every step of the segment.
  Eigen::VectorXd step_rewards(const Trajectory& traj) const;

  void save(const std::string& path) const;
  static RewardNet load(const std::string& path);

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  nn::Mlp mlp_;
};

/// (state_dim + action_dim) x H matrix of per-step network inputs.
Eigen::MatrixXd step_inputs(const Trajectory& traj);

/// Σ_t r̂(s_t, a_t).
double predicted_return(const RewardNet& net, const Trajectory& traj);

/// e^{G1} / (e^{G1} + e^{G2}) evaluated through log-sum-exp.
double bt_prob_from_returns(double first_return, double second_return);

double bt_prob(const RewardNet& net, const TrajectoryPair& pair);

/// Mean binary cross-entropy of observed labels under the Bradley-Terry model,
/// P clamped to [1e-7, 1 - 1e-7]. Throws std::invalid_argument on an empty batch.
double ce_loss(const RewardNet& net, std::span<const LabeledPreference> batch);

/// ce_loss plus its exact gradient, accumulated into `grads`.
double ce_loss_and_gradient(const RewardNet& net, std::span<const LabeledPreference> batch,
                            nn::Gradients& grads);

/// K independently initialized reward networks, each with its own optimizer state and
/// shuffling stream.
class RewardEnsemble {
 public:
  RewardEnsemble(std::size_t state_dim, std::size_t action_dim, const TrainConfig& config);
  explicit RewardEnsemble(std::vector<RewardNet> members, const TrainConfig& config = {});

  std::size_t size() const noexcept { return members_.size(); }
  const RewardNet& member(std::size_t k) const { return members_.at(k); }
  RewardNet& member(std::size_t k) { return members_.at(k); }
  const std::vector<RewardNet>& members() const noexcept { return members_; }

  /// Per-member predicted return of each trajectory: result[k][i].
  std::vector<std::vector<double>> member_returns(std::span<const Trajectory> trajs) const;
  /// Ensemble-mean predicted return.
  double predicted_return(const Trajectory& traj) const;
  /// Ensemble-mean per-step reward, used as a learned reward source.
  double reward(std::span<const double> state, std::span<const double> action) const;
  /// Bradley-Terry probability of τ1 ≻ τ2 from the ensemble-mean return difference.
  double preference_prob(const TrajectoryPair& pair) const;

 private:
  friend struct TrainAccess;
  std::vector<RewardNet> members_;
  std::vector<nn::Optimizer> optimizers_;
  std::vector<SeededRng> shuffle_rngs_;
  TrainConfig config_;
};

struct LossReport {
  std::vector<double> final_loss;                 // per member, last epoch mean
  std::vector<std::vector<double>> epoch_losses;  // per member, per epoch
};

/// Gradient descent on ce_loss over shuffled minibatches, independently per member.
/// Throws NumericError when a loss or parameter becomes non-finite.
LossReport train_update(RewardEnsemble& ensemble, std::span<const LabeledPreference> batch,
                        const TrainConfig& config);

/// Mean over members of |G_k(τ1) - G_k(τ2)|; lower means more uncertain. When `member`
/// is given only that network is used.
double ensemble_uncertainty(const RewardEnsemble& ensemble, const TrajectoryPair& pair,
                            std::optional<std::size_t> member = std::nullopt);

/// Fraction of samples whose ground-truth label the ensemble predicts (strictly).
double label_accuracy(const RewardEnsemble& ensemble, std::span<const LabeledPreference> batch);

}  // namespace prefnoise
