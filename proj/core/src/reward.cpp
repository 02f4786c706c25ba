#include "prefnoise/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "prefnoise/errors.hpp"
#include "prefnoise/math.hpp"

namespace prefnoise {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be > 0");
  if (epochs_per_update < 0) throw ConfigError("train.epochs_per_update must be >= 0");
  if (ensemble_size == 0) throw ConfigError("train.ensemble_size must be > 0");
  for (auto w : hidden) {
    if (w == 0) throw ConfigError("train.hidden widths must be > 0");
  }
}

RewardNet::RewardNet(std::size_t state_dim, std::size_t action_dim,
                     std::span<const std::size_t> hidden, SeededRng& rng)
    : state_dim_(state_dim), action_dim_(action_dim),
      mlp_(state_dim + action_dim, hidden, 1, nn::Activation::tanh, nn::Activation::tanh, rng) {}

RewardNet::RewardNet(std::size_t state_dim, std::size_t action_dim, nn::Mlp mlp)
    : state_dim_(state_dim), action_dim_(action_dim), mlp_(std::move(mlp)) {
  if (mlp_.input_dim() != state_dim + action_dim || mlp_.output_dim() != 1) {
    throw ConfigError("reward network must map state+action to a scalar");
  }
}

double RewardNet::reward(std::span<const double> state, std::span<const double> action) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(state_dim_ + action_dim_));
  for (std::size_t i = 0; i < state_dim_; ++i) x(static_cast<Eigen::Index>(i)) = state[i];
  for (std::size_t i = 0; i < action_dim_; ++i) {
    x(static_cast<Eigen::Index>(state_dim_ + i)) = action[i];
  }
  return mlp_.forward(x)(0, 0);
}

Eigen::VectorXd RewardNet::step_rewards(const Trajectory& traj) const {
  return mlp_.forward(step_inputs(traj)).row(0).transpose();
}

void RewardNet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "reward_net " << state_dim_ << ' ' << action_dim_ << '\n';
  mlp_.save(out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

RewardNet RewardNet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string tag;
  std::size_t sd = 0;
  std::size_t ad = 0;
  if (!(in >> tag >> sd >> ad) || tag != "reward_net") {
    throw ParseError("'" + path + "' is not a reward network parameter file");
  }
  return RewardNet(sd, ad, nn::Mlp::load(in));
}

Eigen::MatrixXd step_inputs(const Trajectory& traj) {
  const auto h = static_cast<Eigen::Index>(traj.horizon());
  const auto d = static_cast<Eigen::Index>(traj.step_dim());
  Eigen::MatrixXd x(d, h);
  for (Eigen::Index t = 0; t < h; ++t) {
    const auto s = traj.state(static_cast<std::size_t>(t));
    const auto a = traj.action(static_cast<std::size_t>(t));
    for (std::size_t i = 0; i < s.size(); ++i) x(static_cast<Eigen::Index>(i), t) = s[i];
    for (std::size_t i = 0; i < a.size(); ++i) {
      x(static_cast<Eigen::Index>(s.size() + i), t) = a[i];
    }
  }
  return x;
}

double predicted_return(const RewardNet& net, const Trajectory& traj) {
  return net.step_rewards(traj).sum();
}

double bt_prob_from_returns(double first_return, double second_return) {
  const double m = std::max(first_return, second_return);
  const double lse = m + std::log(std::exp(first_return - m) + std::exp(second_return - m));
  return std::exp(first_return - lse);
}

double bt_prob(const RewardNet& net, const TrajectoryPair& pair) {
  return bt_prob_from_returns(predicted_return(net, pair.first), predicted_return(net, pair.second));
}

namespace {

double clamped_ce(double p, double y) {
  const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

// Stacks every step of every pair: columns [first steps of pair b | second steps of
// pair b] for b = 0..B-1.
Eigen::MatrixXd stack_batch(std::span<const LabeledPreference> batch) {
  const auto& ref = batch.front().pair.first;
  const auto d = static_cast<Eigen::Index>(ref.step_dim());
  Eigen::Index cols = 0;
  for (const auto& s : batch) {
    cols += static_cast<Eigen::Index>(s.pair.first.horizon() + s.pair.second.horizon());
  }
  Eigen::MatrixXd x(d, cols);
  Eigen::Index c = 0;
  auto put = [&](const Trajectory& traj) {
    const auto block = step_inputs(traj);
    x.middleCols(c, block.cols()) = block;
    c += block.cols();
  };
  for (const auto& s : batch) {
    put(s.pair.first);
    put(s.pair.second);
  }
  return x;
}

}  // namespace

double ce_loss(const RewardNet& net, std::span<const LabeledPreference> batch) {
  if (batch.empty()) throw std::invalid_argument("ce_loss needs a non-empty batch");
  const Eigen::MatrixXd out = net.mlp().forward(stack_batch(batch));
  double total = 0.0;
  Eigen::Index c = 0;
  for (const auto& s : batch) {
    const auto h1 = static_cast<Eigen::Index>(s.pair.first.horizon());
    const auto h2 = static_cast<Eigen::Index>(s.pair.second.horizon());
    const double g1 = out.middleCols(c, h1).sum();
    const double g2 = out.middleCols(c + h1, h2).sum();
    c += h1 + h2;
    total += clamped_ce(bt_prob_from_returns(g1, g2), as_target(s.observed));
  }
  return total / static_cast<double>(batch.size());
}

namespace {

// Loss and gradient for pairs laid out as consecutive column blocks of `x`:
// pair b owns columns [start_b, start_b + h1_b) for the first segment and the next h2_b
// columns for the second.
struct Segments {
  std::vector<Eigen::Index> h1;
  std::vector<Eigen::Index> h2;
  std::vector<double> target;
};

double stacked_loss_and_gradient(const nn::Mlp& mlp, const Eigen::MatrixXd& x,
                                 const Segments& seg, nn::Gradients& grads, nn::Tape& tape) {
  const Eigen::MatrixXd out = mlp.forward(x, tape);
  Eigen::MatrixXd grad_out(1, out.cols());
  const double inv_b = 1.0 / static_cast<double>(seg.target.size());
  double total = 0.0;
  Eigen::Index c = 0;
  for (std::size_t b = 0; b < seg.target.size(); ++b) {
    const auto h1 = seg.h1[b];
    const auto h2 = seg.h2[b];
    const double g1 = out.middleCols(c, h1).sum();
    const double g2 = out.middleCols(c + h1, h2).sum();
    const double p = bt_prob_from_returns(g1, g2);
    const double y = seg.target[b];
    total += clamped_ce(p, y);
    // d/dz of the clamped loss, z = G1 - G2; zero where the clamp is active.
    const bool clamped = p < kProbabilityClamp || p > 1.0 - kProbabilityClamp;
    const double dz = clamped ? 0.0 : (p - y) * inv_b;
    grad_out.middleCols(c, h1).setConstant(dz);
    grad_out.middleCols(c + h1, h2).setConstant(-dz);
    c += h1 + h2;
  }
  mlp.backward(tape, grad_out, grads);
  return total * inv_b;
}

Segments segments_of(std::span<const LabeledPreference> batch) {
  Segments seg;
  for (const auto& s : batch) {
    seg.h1.push_back(static_cast<Eigen::Index>(s.pair.first.horizon()));
    seg.h2.push_back(static_cast<Eigen::Index>(s.pair.second.horizon()));
    seg.target.push_back(as_target(s.observed));
  }
  return seg;
}

}  // namespace

double ce_loss_and_gradient(const RewardNet& net, std::span<const LabeledPreference> batch,
                            nn::Gradients& grads) {
  if (batch.empty()) throw std::invalid_argument("ce_loss needs a non-empty batch");
  nn::Tape tape;
  return stacked_loss_and_gradient(net.mlp(), stack_batch(batch), segments_of(batch), grads, tape);
}

RewardEnsemble::RewardEnsemble(std::size_t state_dim, std::size_t action_dim,
                               const TrainConfig& config)
    : config_(config) {
  config.validate();
  const SeededRng root(config.seed);
  for (std::size_t k = 0; k < config.ensemble_size; ++k) {
    SeededRng init = root.split(100 + k);
    members_.emplace_back(state_dim, action_dim, config.hidden, init);
    shuffle_rngs_.push_back(root.split(200 + k));
  }
  nn::OptimizerConfig oc;
  oc.kind = config.optimizer;
  oc.learning_rate = config.learning_rate;
  oc.momentum = config.momentum;
  for (const auto& m : members_) optimizers_.emplace_back(oc, m.mlp());
}

RewardEnsemble::RewardEnsemble(std::vector<RewardNet> members, const TrainConfig& config)
    : members_(std::move(members)), config_(config) {
  if (members_.empty()) throw ConfigError("ensemble needs at least one member");
  const SeededRng root(config.seed);
  nn::OptimizerConfig oc;
  oc.kind = config.optimizer;
  oc.learning_rate = config.learning_rate;
  oc.momentum = config.momentum;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    shuffle_rngs_.push_back(root.split(200 + k));
    optimizers_.emplace_back(oc, members_[k].mlp());
  }
}

std::vector<std::vector<double>> RewardEnsemble::member_returns(
    std::span<const Trajectory> trajs) const {
  std::vector<std::vector<double>> out(members_.size(), std::vector<double>(trajs.size(), 0.0));
  if (trajs.empty()) return out;
  const auto d = static_cast<Eigen::Index>(trajs.front().step_dim());
  // Chunked so the hidden activations stay cache-sized.
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < trajs.size(); begin += kChunk) {
    const auto chunk = trajs.subspan(begin, std::min(kChunk, trajs.size() - begin));
    Eigen::Index cols = 0;
    for (const auto& t : chunk) cols += static_cast<Eigen::Index>(t.horizon());
    Eigen::MatrixXd x(d, cols);
    Eigen::Index c = 0;
    for (const auto& t : chunk) {
      const auto block = step_inputs(t);
      x.middleCols(c, block.cols()) = block;
      c += block.cols();
    }
    for (std::size_t k = 0; k < members_.size(); ++k) {
      const Eigen::MatrixXd r = members_[k].mlp().forward(x);
      c = 0;
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        const auto h = static_cast<Eigen::Index>(chunk[i].horizon());
        out[k][begin + i] = r.middleCols(c, h).sum();
        c += h;
      }
    }
  }
  return out;
}

double RewardEnsemble::predicted_return(const Trajectory& traj) const {
  double total = 0.0;
  for (const auto& m : members_) total += prefnoise::predicted_return(m, traj);
  return total / static_cast<double>(members_.size());
}

double RewardEnsemble::reward(std::span<const double> state,
                              std::span<const double> action) const {
  double total = 0.0;
  for (const auto& m : members_) total += m.reward(state, action);
  return total / static_cast<double>(members_.size());
}

double RewardEnsemble::preference_prob(const TrajectoryPair& pair) const {
  return bt_prob_from_returns(predicted_return(pair.first), predicted_return(pair.second));
}

struct TrainAccess {
  static LossReport train(RewardEnsemble& e, std::span<const LabeledPreference> batch,
                          const TrainConfig& config) {
    if (batch.empty()) throw std::invalid_argument("train_update needs a non-empty batch");
    config.validate();
    LossReport report;
    report.final_loss.assign(e.members_.size(), 0.0);
    report.epoch_losses.assign(e.members_.size(), {});
    const Eigen::MatrixXd all = stack_batch(batch);
    const Segments all_seg = segments_of(batch);
    std::vector<Eigen::Index> first_col(batch.size());
    for (std::size_t i = 0, c = 0; i < batch.size(); ++i) {
      first_col[i] = static_cast<Eigen::Index>(c);
      c += static_cast<std::size_t>(all_seg.h1[i] + all_seg.h2[i]);
    }
    std::vector<std::size_t> order(batch.size());
    Eigen::MatrixXd x;
    Segments seg;
    nn::Tape tape;
    for (std::size_t k = 0; k < e.members_.size(); ++k) {
      auto& net = e.members_[k];
      auto grads = net.mlp().zero_gradients();
      for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), e.shuffle_rngs_[k].engine());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
          const std::size_t end = std::min(order.size(), start + config.batch_size);
          seg.h1.clear();
          seg.h2.clear();
          seg.target.clear();
          Eigen::Index cols = 0;
          for (std::size_t i = start; i < end; ++i) {
            const auto j = order[i];
            seg.h1.push_back(all_seg.h1[j]);
            seg.h2.push_back(all_seg.h2[j]);
            seg.target.push_back(all_seg.target[j]);
            cols += all_seg.h1[j] + all_seg.h2[j];
          }
          x.resize(all.rows(), cols);
          Eigen::Index c = 0;
          for (std::size_t i = start; i < end; ++i) {
            const auto j = order[i];
            const auto w = all_seg.h1[j] + all_seg.h2[j];
            x.middleCols(c, w) = all.middleCols(first_col[j], w);
            c += w;
          }
          for (auto& g : grads) {
            g.weight.setZero();
            g.bias.setZero();
          }
          const double loss = stacked_loss_and_gradient(net.mlp(), x, seg, grads, tape);
          if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "non-finite reward loss (" << loss << ") in member " << k << ", epoch "
                << epoch << ", minibatch starting at " << start;
            throw NumericError(msg.str());
          }
          e.optimizers_[k].step(net.mlp(), grads);
          epoch_loss += loss * static_cast<double>(end - start);
        }
        if (!net.mlp().all_finite()) {
          throw NumericError("reward member " + std::to_string(k) +
                             " has non-finite parameters after epoch " + std::to_string(epoch));
        }
        report.epoch_losses[k].push_back(epoch_loss / static_cast<double>(batch.size()));
      }
      report.final_loss[k] =
          report.epoch_losses[k].empty() ? ce_loss(net, batch) : report.epoch_losses[k].back();
    }
    return report;
  }
};

LossReport train_update(RewardEnsemble& ensemble, std::span<const LabeledPreference> batch,
                        const TrainConfig& config) {
  return TrainAccess::train(ensemble, batch, config);
}

double ensemble_uncertainty(const RewardEnsemble& ensemble, const TrajectoryPair& pair,
                            std::optional<std::size_t> member) {
  if (member) {
    const auto& net = ensemble.member(*member);
    return std::abs(predicted_return(net, pair.first) - predicted_return(net, pair.second));
  }
  double total = 0.0;
  for (const auto& net : ensemble.members()) {
    total += std::abs(predicted_return(net, pair.first) - predicted_return(net, pair.second));
  }
  return total / static_cast<double>(ensemble.size());
}

double label_accuracy(const RewardEnsemble& ensemble, std::span<const LabeledPreference> batch) {
  if (batch.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : batch) {
    const double diff =
        ensemble.predicted_return(s.pair.first) - ensemble.predicted_return(s.pair.second);
    const bool predicts_first = diff > 0.0;
    const bool predicts_second = diff < 0.0;
    if ((s.ground_truth == PreferenceLabel::first && predicts_first) ||
        (s.ground_truth == PreferenceLabel::second && predicts_second)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace prefnoise
