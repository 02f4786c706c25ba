#include "prefnoise/latent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "prefnoise/errors.hpp"
#include "prefnoise/rng.hpp"

namespace prefnoise {
namespace {

constexpr double kLogVarLimit = 10.0;

Eigen::MatrixXd to_matrix(std::span<const std::vector<double>> rows, std::size_t dim) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != dim) {
      throw std::invalid_argument("trajectory features have " + std::to_string(rows[c].size()) +
                                  " entries, encoder expects " + std::to_string(dim));
    }
    for (std::size_t r = 0; r < dim; ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r];
    }
  }
  return x;
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_dim == 0 || embedding_dim == 0) throw ConfigError("encoder dims must be >= 1");
  if (embedding_dim >= input_dim) {
    throw ConfigError("encoder embedding_dim (" + std::to_string(embedding_dim) +
                      ") must be smaller than input_dim (" + std::to_string(input_dim) + ")");
  }
  for (auto w : hidden_dims) {
    if (w == 0) throw ConfigError("encoder hidden dims must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("encoder learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("encoder epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("encoder batch_size must be >= 1");
  if (kl_weight < 0.0 || reconstruction_weight < 0.0) {
    throw ConfigError("encoder loss weights must be >= 0");
  }
}

Encoder::Encoder(nn::Mlp encoder, nn::Mlp decoder, std::size_t embedding_dim, bool trained)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)), embedding_dim_(embedding_dim),
      trained_(trained) {
  if (encoder_.output_dim() != 2 * embedding_dim_ || decoder_.input_dim() != embedding_dim_ ||
      decoder_.output_dim() != encoder_.input_dim()) {
    throw ConfigError("encoder/decoder shapes are inconsistent");
  }
}

std::vector<double> Encoder::embed(std::span<const double> features) const {
  if (features.size() != input_dim()) {
    throw std::invalid_argument("trajectory features have " + std::to_string(features.size()) +
                                " entries, encoder expects " + std::to_string(input_dim()));
  }
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  const Eigen::MatrixXd head = encoder_.forward(x);
  std::vector<double> out(embedding_dim_);
  for (std::size_t i = 0; i < embedding_dim_; ++i) out[i] = head(static_cast<Eigen::Index>(i), 0);
  return out;
}

double Encoder::reconstruction_loss(std::span<const std::vector<double>> rows) const {
  if (rows.empty()) return 0.0;
  const Eigen::MatrixXd x = to_matrix(rows, input_dim());
  const Eigen::MatrixXd head = encoder_.forward(x);
  const Eigen::MatrixXd recon = decoder_.forward(head.topRows(static_cast<Eigen::Index>(embedding_dim_)));
  return (recon - x).squaredNorm() / static_cast<double>(rows.size());
}

void Encoder::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "encoder " << embedding_dim_ << ' ' << (trained_ ? 1 : 0) << '\n';
  encoder_.save(out);
  decoder_.save(out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Encoder Encoder::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string tag;
  std::size_t dim = 0;
  int trained = 0;
  if (!(in >> tag >> dim >> trained) || tag != "encoder") {
    throw ParseError("'" + path + "' is not an encoder parameter file");
  }
  auto enc = nn::Mlp::load(in);
  auto dec = nn::Mlp::load(in);
  return Encoder(std::move(enc), std::move(dec), dim, trained != 0);
}

Encoder init_encoder(const EncoderConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  SeededRng enc_rng = rng.split(1);
  SeededRng dec_rng = rng.split(2);
  nn::Mlp enc(cfg.input_dim, cfg.hidden_dims, 2 * cfg.embedding_dim, nn::Activation::tanh,
              nn::Activation::identity, enc_rng);
  std::vector<std::size_t> dec_hidden(cfg.hidden_dims.rbegin(), cfg.hidden_dims.rend());
  nn::Mlp dec(cfg.embedding_dim, dec_hidden, cfg.input_dim, nn::Activation::tanh,
              nn::Activation::identity, dec_rng);
  return Encoder(std::move(enc), std::move(dec), cfg.embedding_dim, false);
}

EncoderTraining train_encoder_with_report(std::span<const Trajectory> trajs,
                                          const EncoderConfig& cfg) {
  cfg.validate();
  if (trajs.size() < cfg.batch_size) {
    throw std::invalid_argument("train_encoder needs at least batch_size (" +
                                std::to_string(cfg.batch_size) + ") trajectories, got " +
                                std::to_string(trajs.size()));
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(trajs.size());
  for (const auto& t : trajs) rows.push_back(t.flat_features());
  const Eigen::MatrixXd data = to_matrix(rows, cfg.input_dim);

  Encoder start = init_encoder(cfg);
  nn::Mlp enc = start.encoder_net();
  nn::Mlp dec = start.decoder_net();
  const double initial = start.reconstruction_loss(rows);

  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::sgd;
  oc.learning_rate = cfg.learning_rate;
  nn::Optimizer enc_opt(oc, enc);
  nn::Optimizer dec_opt(oc, dec);

  SeededRng rng = SeededRng(cfg.seed).split(3);
  const auto e = static_cast<Eigen::Index>(cfg.embedding_dim);
  std::vector<std::size_t> order(rows.size());
  nn::Tape enc_tape;
  nn::Tape dec_tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    // Drop the ragged tail so every step sees a full batch.
    for (std::size_t start_i = 0; start_i + cfg.batch_size <= order.size();
         start_i += cfg.batch_size) {
      const auto b = static_cast<Eigen::Index>(cfg.batch_size);
      Eigen::MatrixXd x(data.rows(), b);
      for (Eigen::Index c = 0; c < b; ++c) {
        x.col(c) = data.col(static_cast<Eigen::Index>(order[start_i + static_cast<std::size_t>(c)]));
      }
      const Eigen::MatrixXd head = enc.forward(x, enc_tape);
      const Eigen::MatrixXd mu = head.topRows(e);
      const Eigen::MatrixXd logvar = head.bottomRows(e).cwiseMax(-kLogVarLimit).cwiseMin(kLogVarLimit);
      Eigen::MatrixXd eps(e, b);
      for (Eigen::Index r = 0; r < e; ++r) {
        for (Eigen::Index c = 0; c < b; ++c) eps(r, c) = rng.normal();
      }
      const Eigen::MatrixXd std_dev = (0.5 * logvar.array()).exp().matrix();
      const Eigen::MatrixXd z = mu + std_dev.cwiseProduct(eps);
      const Eigen::MatrixXd recon = dec.forward(z, dec_tape);

      const double inv_b = 1.0 / static_cast<double>(b);
      const Eigen::MatrixXd d_recon = (2.0 * cfg.reconstruction_weight * inv_b) * (recon - x);
      auto dec_grads = dec.zero_gradients();
      const Eigen::MatrixXd dz = dec.backward(dec_tape, d_recon, dec_grads);

      Eigen::MatrixXd d_head(2 * e, b);
      d_head.topRows(e) = dz + (cfg.kl_weight * inv_b) * mu;
      d_head.bottomRows(e) =
          (dz.cwiseProduct(eps).cwiseProduct(std_dev) * 0.5).array() +
          (cfg.kl_weight * inv_b * 0.5) * (logvar.array().exp() - 1.0);
      auto enc_grads = enc.zero_gradients();
      enc.backward(enc_tape, d_head, enc_grads);

      dec_opt.step(dec, dec_grads);
      enc_opt.step(enc, enc_grads);
    }
    if (!enc.all_finite() || !dec.all_finite()) {
      throw NumericError("encoder parameters became non-finite in epoch " + std::to_string(epoch));
    }
  }
  Encoder trained(std::move(enc), std::move(dec), cfg.embedding_dim, true);
  const double final_loss = trained.reconstruction_loss(rows);
  return {std::move(trained), initial, final_loss};
}

Encoder train_encoder(std::span<const Trajectory> trajs, const EncoderConfig& cfg) {
  return train_encoder_with_report(trajs, cfg).encoder;
}

std::vector<double> encode(const Encoder& enc, const Trajectory& traj) {
  return enc.embed(traj.flat_features());
}

double embedding_distance(const Encoder& enc, const Trajectory& a, const Trajectory& b) {
  const auto ea = encode(enc, a);
  const auto eb = encode(enc, b);
  double ss = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) ss += (ea[i] - eb[i]) * (ea[i] - eb[i]);
  return std::sqrt(ss);
}

}  // namespace prefnoise
