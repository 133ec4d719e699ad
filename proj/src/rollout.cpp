#include "ibrl/rollout.hpp"

#include <algorithm>

namespace ibrl::agents {

GridRLEnv::GridRLEnv(std::vector<env::MazeLayout> layouts)
    : layouts_(std::move(layouts)) {
  if (layouts_.empty()) throw ConfigError("GridRLEnv: empty layout pool");
}

nn::Tensor GridRLEnv::reset(std::mt19937_64& rng) {
  const size_t pick =
      layouts_.size() == 1 ? 0 : rng() % layouts_.size();
  env_ = std::make_unique<env::GridEnv>(layouts_[pick]);
  return env_->reset();
}

EnvStep GridRLEnv::step(int action) {
  auto res = env_->step(action);
  return {std::move(res.observation), res.reward, res.done};
}

CartPoleRLEnv::CartPoleRLEnv(env::CartPoleContext fixed) : ctx_(fixed) {}
CartPoleRLEnv::CartPoleRLEnv() : randomize_(true) {}

nn::Tensor CartPoleRLEnv::reset(std::mt19937_64& rng) {
  if (randomize_) ctx_ = env::sample_train_context(rng);
  env_ = std::make_unique<env::CartPoleEnv>(ctx_);
  return env_->reset(rng);
}

EnvStep CartPoleRLEnv::step(int action) {
  auto res = env_->step(action);
  return {std::move(res.observation), res.reward, res.done};
}

nn::Tensor RolloutBatch::gather_observations(
    const std::vector<int>& rows) const {
  const long osz = obs_size();
  std::vector<int> shape = {static_cast<int>(rows.size())};
  shape.insert(shape.end(), obs_shape.begin(), obs_shape.end());
  nn::Tensor out(shape);
  for (size_t r = 0; r < rows.size(); ++r)
    std::copy(observations.begin() + rows[r] * osz,
              observations.begin() + (rows[r] + 1) * osz,
              out.data.begin() + static_cast<long>(r) * osz);
  return out;
}

nn::Tensor RolloutBatch::gather_eps(const std::vector<int>& rows) const {
  const int d = code_dim();
  nn::Tensor out({static_cast<int>(rows.size()), d});
  for (size_t r = 0; r < rows.size(); ++r)
    std::copy(eps.begin() + static_cast<long>(rows[r]) * d,
              eps.begin() + static_cast<long>(rows[r] + 1) * d,
              out.data.begin() + static_cast<long>(r) * d);
  return out;
}

GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<uint8_t>& dones,
                      const std::vector<double>& bootstrap_values, int n_envs,
                      int n_steps, double gamma, double lambda) {
  const size_t n = static_cast<size_t>(n_envs) * n_steps;
  if (rewards.size() != n || values.size() != n || dones.size() != n ||
      bootstrap_values.size() != static_cast<size_t>(n_envs))
    throw NumericError("compute_gae: misaligned arrays");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (int e = 0; e < n_envs; ++e) {
    double gae = 0.0;
    for (int t = n_steps - 1; t >= 0; --t) {
      const size_t i = static_cast<size_t>(t) * n_envs + e;
      const bool terminal = dones[i] != 0;
      const double next_value =
          terminal ? 0.0
                   : (t == n_steps - 1
                          ? bootstrap_values[e]
                          : values[static_cast<size_t>(t + 1) * n_envs + e]);
      const double delta = rewards[i] + gamma * next_value - values[i];
      gae = delta + gamma * lambda * (terminal ? 0.0 : gae);
      out.advantages[i] = gae;
      out.returns[i] = gae + values[i];
    }
  }
  return out;
}

}  // namespace ibrl::agents
