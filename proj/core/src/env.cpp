#include "prefnoise/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prefnoise/errors.hpp"

namespace prefnoise {

std::string_view to_string(EnvKind kind) {
  return kind == EnvKind::gridworld ? "gridworld" : "pointmass";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "gridworld") return EnvKind::gridworld;
  if (name == "pointmass") return EnvKind::pointmass;
  throw ConfigError("unknown env kind '" + std::string(name) + "'");
}

void EnvSpec::validate() const {
  if (horizon < 2) throw ConfigError("env.horizon must be >= 2");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("env.gamma must lie in (0, 1]");
  if (kind == EnvKind::gridworld && grid_size < 3) throw ConfigError("env.size must be >= 3");
  if (kind == EnvKind::pointmass && !(bound > 0.0)) throw ConfigError("env.bound must be > 0");
}

std::vector<double> Trajectory::flat_features() const {
  const std::size_t h = horizon();
  std::vector<double> out;
  out.reserve(h * step_dim());
  for (std::size_t t = 0; t < h; ++t) {
    const auto s = state(t);
    const auto a = action(t);
    out.insert(out.end(), s.begin(), s.end());
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

TrajectoryPair make_pair(Trajectory first, Trajectory second) {
  if (first.id == second.id) {
    throw std::invalid_argument("trajectory pair needs two distinct ids, got " +
                                std::to_string(first.id) + " twice");
  }
  return {std::move(first), std::move(second)};
}

Environment::Environment(EnvSpec spec) : spec_(spec) { spec_.validate(); }

Environment make_env(const EnvSpec& spec) { return Environment(spec); }

int Environment::num_cells() const noexcept {
  return spec_.kind == EnvKind::gridworld ? spec_.grid_size * spec_.grid_size : 0;
}

int Environment::num_actions() const noexcept { return spec_.kind == EnvKind::gridworld ? 4 : 0; }

int Environment::goal_cell() const noexcept { return num_cells() - 1; }

int Environment::start_cell() const noexcept { return 0; }

int Environment::cell_of(std::span<const double> state) const {
  const int n = spec_.grid_size;
  const double scale = 0.5 * (n - 1);
  const int x = std::clamp(static_cast<int>(std::lround((state[0] + 1.0) * scale)), 0, n - 1);
  const int y = std::clamp(static_cast<int>(std::lround((state[1] + 1.0) * scale)), 0, n - 1);
  return y * n + x;
}

std::array<double, 2> Environment::state_of_cell(int cell) const {
  const int n = spec_.grid_size;
  const double scale = 2.0 / (n - 1);
  return {(cell % n) * scale - 1.0, (cell / n) * scale - 1.0};
}

std::array<double, 2> Environment::action_vector(int action) const {
  switch (action) {
    case 0: return {1.0, 0.0};
    case 1: return {-1.0, 0.0};
    case 2: return {0.0, 1.0};
    case 3: return {0.0, -1.0};
    default: throw std::out_of_range("gridworld action must be in [0, 4)");
  }
}

int Environment::action_index(std::span<const double> action) const {
  if (action[0] > 0.5) return 0;
  if (action[0] < -0.5) return 1;
  if (action[1] > 0.5) return 2;
  if (action[1] < -0.5) return 3;
  throw std::invalid_argument("not a gridworld move vector");
}

int Environment::next_cell(int cell, int action) const {
  if (cell == goal_cell()) return cell;
  const int n = spec_.grid_size;
  int x = cell % n;
  int y = cell / n;
  const auto [dx, dy] = action_vector(action);
  x = std::clamp(x + static_cast<int>(dx), 0, n - 1);
  y = std::clamp(y + static_cast<int>(dy), 0, n - 1);
  return y * n + x;
}

double Environment::cell_reward(int cell, int action) const {
  return next_cell(cell, action) == goal_cell() ? 1.0 : 0.0;
}

std::array<double, 2> Environment::initial_state(SeededRng& rng) const {
  if (spec_.kind == EnvKind::gridworld) {
    if (spec_.fixed_start) return state_of_cell(start_cell());
    // Uniform over non-goal cells.
    return state_of_cell(static_cast<int>(rng.index(static_cast<std::size_t>(num_cells() - 1))));
  }
  const double b = spec_.bound;
  if (spec_.fixed_start) return {0.8 * b, 0.8 * b};
  const double x = rng.uniform(-b, b);
  const double y = rng.uniform(-b, b);
  return {x, y};
}

Environment::Step Environment::step(std::span<const double> state,
                                    std::span<const double> action) const {
  if (spec_.kind == EnvKind::gridworld) {
    const int cell = cell_of(state);
    const int a = action_index(action);
    const int next = next_cell(cell, a);
    return {state_of_cell(next), next == goal_cell() ? 1.0 : 0.0};
  }
  const double b = spec_.bound;
  std::array<double, 2> next{};
  for (std::size_t i = 0; i < 2; ++i) {
    const double a = std::clamp(action[i], -1.0, 1.0);
    next[i] = std::clamp(state[i] + 0.1 * b * a, -b, b);
  }
  return {next, -(next[0] * next[0] + next[1] * next[1])};
}

double true_return(const Trajectory& traj, double gamma) {
  double g = 0.0;
  double discount = 1.0;
  for (double r : traj.true_rewards) {
    g += discount * r;
    discount *= gamma;
  }
  return g;
}

std::vector<TrajectoryPair> sample_pairs(std::span<const Trajectory> buffer, std::size_t n,
                                         SeededRng& rng) {
  if (buffer.size() < 2) {
    throw std::invalid_argument("sample_pairs needs at least two trajectories, buffer has " +
                                std::to_string(buffer.size()));
  }
  std::vector<TrajectoryPair> pairs;
  pairs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = rng.index(buffer.size());
    std::size_t j = rng.index(buffer.size() - 1);
    if (j >= i) ++j;
    pairs.push_back(make_pair(buffer[i], buffer[j]));
  }
  return pairs;
}

}  // namespace prefnoise
