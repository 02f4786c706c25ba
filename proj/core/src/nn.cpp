#include "prefnoise/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "prefnoise/errors.hpp"

namespace prefnoise::nn {
namespace {

void activate(Eigen::MatrixXd& z, Activation act) {
  // Eigen vectorizes exp but not tanh for doubles.
  if (act == Activation::tanh) z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

std::string_view activation_name(Activation act) {
  return act == Activation::tanh ? "tanh" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ParseError("unknown activation '" + name + "' in parameter file");
}

}  // namespace

Mlp::Mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
         Activation hidden_activation, Activation output_activation, SeededRng& rng) {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("network dimensions must be >= 1");
  std::size_t in = input_dim;
  auto add_layer = [&](std::size_t out, Activation act) {
    if (out == 0) throw ConfigError("hidden layer widths must be >= 1");
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-limit, limit);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    layer.activation = act;
    layers_.push_back(std::move(layer));
    in = out;
  };
  for (std::size_t width : hidden) add_layer(width, hidden_activation);
  add_layer(output_dim, output_activation);
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) throw ConfigError("bias/weight shape mismatch");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw ConfigError("consecutive layer shapes do not chain");
    }
  }
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    activate(z, layer.activation);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  tape.inputs.clear();
  tape.outputs.clear();
  tape.inputs.reserve(layers_.size());
  tape.outputs.reserve(layers_.size());
  const Eigen::MatrixXd* a = &x;
  for (const auto& layer : layers_) {
    tape.inputs.push_back(*a);
    Eigen::MatrixXd z = layer.weight * *a;
    z.colwise() += layer.bias;
    activate(z, layer.activation);
    tape.outputs.push_back(std::move(z));
    a = &tape.outputs.back();
  }
  return tape.outputs.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                              Gradients& grads) const {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& layer = layers_[k];
    if (layer.activation == Activation::tanh) {
      delta.array() *= 1.0 - tape.outputs[k].array().square();
    }
    grads[k].weight.noalias() += delta * tape.inputs[k].transpose();
    grads[k].bias += delta.rowwise().sum();
    delta = layer.weight.transpose() * delta;
  }
  return delta;
}

Gradients Mlp::zero_gradients() const {
  Gradients g(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    g[k].weight = Eigen::MatrixXd::Zero(layers_[k].weight.rows(), layers_[k].weight.cols());
    g[k].bias = Eigen::VectorXd::Zero(layers_[k].bias.size());
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    // Row-major weights, then bias.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Mlp::set_flat_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) +
                                " entries, network expects " +
                                std::to_string(parameter_count()));
  }
  std::size_t i = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[i++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = params[i++];
  }
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::save(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "mlp " << layers_.size() << '\n';
  for (const auto& l : layers_) {
    out << l.weight.cols() << ' ' << l.weight.rows() << ' ' << activation_name(l.activation)
        << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        out << l.weight(r, c) << (c + 1 == l.weight.cols() ? '\n' : ' ');
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      out << l.bias(r) << (r + 1 == l.bias.size() ? '\n' : ' ');
    }
  }
  out.precision(old_precision);
}

Mlp Mlp::load(std::istream& in) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "mlp" || count == 0) {
    throw ParseError("parameter file does not start with an 'mlp <layers>' header");
  }
  std::vector<DenseLayer> layers(count);
  for (auto& l : layers) {
    Eigen::Index cols = 0;
    Eigen::Index rows = 0;
    std::string act;
    if (!(in >> cols >> rows >> act) || cols <= 0 || rows <= 0) {
      throw ParseError("malformed layer header in parameter file");
    }
    l.activation = activation_from_name(act);
    l.weight.resize(rows, cols);
    l.bias.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(in >> l.weight(r, c))) throw ParseError("truncated weights in parameter file");
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!(in >> l.bias(r))) throw ParseError("truncated biases in parameter file");
    }
  }
  return Mlp(std::move(layers));
}

std::vector<double> flatten(const Gradients& grads) {
  std::vector<double> out;
  for (const auto& g : grads) {
    for (Eigen::Index r = 0; r < g.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weight.cols(); ++c) out.push_back(g.weight(r, c));
    }
    for (Eigen::Index r = 0; r < g.bias.size(); ++r) out.push_back(g.bias(r));
  }
  return out;
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "sgd";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "sgd_momentum") return OptimizerKind::sgd_momentum;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(const OptimizerConfig& config, const Mlp& net)
    : config_(config), first_(net.zero_gradients()), second_(net.zero_gradients()) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

void Optimizer::step(Mlp& net, const Gradients& grads) {
  auto& layers = net.layers();
  const double lr = config_.learning_rate;
  ++steps_;
  switch (config_.kind) {
    case OptimizerKind::sgd:
      for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weight -= lr * grads[k].weight;
        layers[k].bias -= lr * grads[k].bias;
      }
      break;
    case OptimizerKind::sgd_momentum:
      for (std::size_t k = 0; k < layers.size(); ++k) {
        first_[k].weight = config_.momentum * first_[k].weight + grads[k].weight;
        first_[k].bias = config_.momentum * first_[k].bias + grads[k].bias;
        layers[k].weight -= lr * first_[k].weight;
        layers[k].bias -= lr * first_[k].bias;
      }
      break;
    case OptimizerKind::adam: {
      const double b1 = config_.beta1;
      const double b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
      };
      for (std::size_t k = 0; k < layers.size(); ++k) {
        update(layers[k].weight, first_[k].weight, second_[k].weight, grads[k].weight);
        update(layers[k].bias, first_[k].bias, second_[k].bias, grads[k].bias);
      }
      break;
    }
  }
}

}  // namespace prefnoise::nn
