#include "ibrl/env_cartpole.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ibrl::env {

namespace {
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kTau = 0.02;
constexpr double kAngleLimit = 12.0 * M_PI / 180.0;
constexpr double kPositionLimit = 2.4;
}  // namespace

CartPoleContext::CartPoleContext(double f, double l)
    : force(f), half_length(l) {
  if (f <= 0.0 || l <= 0.0)
    throw ConfigError("CartPoleContext: force and length must be positive");
}

std::vector<double> context_forces(GridKind kind) {
  switch (kind) {
    case GridKind::Train: return {7.0, 9.0, 11.0, 13.0};
    case GridKind::Test:
      return {1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0};
    case GridKind::Extreme: return {80.0, 160.0};
    case GridKind::Unseen20: return context_forces(GridKind::Test);
  }
  throw ConfigError("unknown grid kind");
}

std::vector<double> context_lengths(GridKind kind) {
  switch (kind) {
    case GridKind::Train: return {0.45, 0.50, 0.55};
    case GridKind::Test:
      return {0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7};
    case GridKind::Extreme: return {1.7, 3.4, 6.8};
    case GridKind::Unseen20: return context_lengths(GridKind::Test);
  }
  throw ConfigError("unknown grid kind");
}

double context_distance(const CartPoleContext& c) {
  // Test-grid spans: forces 1..40, half-lengths 0.1..1.7.
  const double df = std::max({0.0, 7.0 - c.force, c.force - 13.0}) / 39.0;
  const double dl =
      std::max({0.0, 0.45 - c.half_length, c.half_length - 0.55}) / 1.6;
  return std::hypot(df, dl);
}

std::vector<CartPoleContext> context_grid(GridKind kind) {
  if (kind == GridKind::Unseen20) {
    // The 20 out-of-training Test cells farthest from the training box,
    // ties broken toward larger force then larger length. The distance
    // ranking has a clear gap at the 20/21 boundary, so the set is stable
    // against floating-point noise.
    std::vector<CartPoleContext> cells;
    for (const auto& c : context_grid(GridKind::Test))
      if (!in_train_box(c)) cells.push_back(c);
    std::stable_sort(cells.begin(), cells.end(),
                     [](const CartPoleContext& a, const CartPoleContext& b) {
                       const double da = context_distance(a);
                       const double db = context_distance(b);
                       if (da != db) return da > db;
                       if (a.force != b.force) return a.force > b.force;
                       return a.half_length > b.half_length;
                     });
    cells.resize(20);
    return cells;
  }
  std::vector<CartPoleContext> grid;
  for (double f : context_forces(kind))
    for (double l : context_lengths(kind)) grid.emplace_back(f, l);
  return grid;
}

bool in_train_box(const CartPoleContext& c) {
  return c.force >= 7.0 && c.force <= 13.0 && c.half_length >= 0.45 &&
         c.half_length <= 0.55;
}

CartPoleContext sample_train_context(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(7.0, 13.0);
  std::uniform_real_distribution<double> l(0.45, 0.55);
  return CartPoleContext(f(rng), l(rng));
}

CartPoleEnv::CartPoleEnv(CartPoleContext context) : ctx_(context) {}

std::array<double, 4> CartPoleEnv::physics_step(
    const std::array<double, 4>& s, const CartPoleContext& ctx, int action) {
  const double force = action == 1 ? ctx.force : -ctx.force;
  const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  const double total_mass = kCartMass + kPoleMass;
  const double pole_mass_length = kPoleMass * ctx.half_length;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp =
      (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (ctx.half_length *
       (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;
  // semi-implicit Euler: velocities first, then positions
  std::array<double, 4> out;
  out[1] = x_dot + kTau * x_acc;
  out[0] = x + kTau * out[1];
  out[3] = theta_dot + kTau * theta_acc;
  out[2] = theta + kTau * out[3];
  return out;
}

nn::Tensor CartPoleEnv::observation() const {
  nn::Tensor obs({1, kCartPoleObsDim});
  for (int i = 0; i < kCartPoleObsDim; ++i) obs.data[i] = state_[i];
  return obs;
}

nn::Tensor CartPoleEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (auto& v : state_) v = u(rng);
  steps_ = 0;
  done_ = false;
  started_ = true;
  return observation();
}

CartPoleEnv::StepResult CartPoleEnv::step(int action) {
  if (!started_) throw ArtifactError("CartPoleEnv: step before reset");
  if (done_) throw ArtifactError("CartPoleEnv: step after episode end");
  if (action < 0 || action >= kCartPoleActions)
    throw ArtifactError("CartPoleEnv: invalid action " +
                        std::to_string(action));
  state_ = physics_step(state_, ctx_, action);
  ++steps_;
  StepResult out;
  out.reward = 1.0;
  done_ = std::abs(state_[2]) > kAngleLimit ||
          std::abs(state_[0]) > kPositionLimit || steps_ >= kCartPoleHorizon;
  out.done = done_;
  out.observation = observation();
  return out;
}

}  // namespace ibrl::env
