#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "ibrl/env_cartpole.hpp"
#include "ibrl/env_grid.hpp"
#include "ibrl/tensor.hpp"

namespace ibrl::agents {

struct EnvStep {
  nn::Tensor observation;
  double reward = 0.0;
  bool done = false;
};

// Type-erased episodic environment used by the trainers.
class RLEnv {
 public:
  virtual ~RLEnv() = default;
  virtual nn::Tensor reset(std::mt19937_64& rng) = 0;
  virtual EnvStep step(int action) = 0;
  virtual int action_count() const = 0;
};

// Picks a layout uniformly from the pool at each reset.
class GridRLEnv : public RLEnv {
 public:
  explicit GridRLEnv(std::vector<env::MazeLayout> layouts);
  nn::Tensor reset(std::mt19937_64& rng) override;
  EnvStep step(int action) override;
  int action_count() const override { return env::kGridActions; }

 private:
  std::vector<env::MazeLayout> layouts_;
  std::unique_ptr<env::GridEnv> env_;
};

// Fixed context, or a fresh draw from the continuous training ranges at
// every reset (the dynamics-randomization regime).
class CartPoleRLEnv : public RLEnv {
 public:
  explicit CartPoleRLEnv(env::CartPoleContext fixed);
  CartPoleRLEnv();  // randomize per episode
  nn::Tensor reset(std::mt19937_64& rng) override;
  EnvStep step(int action) override;
  int action_count() const override { return env::kCartPoleActions; }

 private:
  bool randomize_ = false;
  env::CartPoleContext ctx_;
  std::unique_ptr<env::CartPoleEnv> env_;
};

using EnvFactory = std::function<std::unique_ptr<RLEnv>()>;

// Flat step-major arrays: index = step * n_envs + env.
struct RolloutBatch {
  int n_envs = 0;
  int n_steps = 0;
  std::vector<int> obs_shape;  // per-observation shape, no batch axis

  std::vector<double> observations;  // n * obs_size
  std::vector<double> mu, sigma, z, eps;  // n * code_dim
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;           // raw environment rewards
  std::vector<double> kls;               // nats, >= 0
  std::vector<double> modified_rewards;  // reward - beta * kl
  std::vector<double> values;
  std::vector<uint8_t> dones;
  // value bootstrap for each env's unfinished trajectory tail
  std::vector<double> bootstrap_values;
  double beta = 0.0;

  int size() const { return n_envs * n_steps; }
  long obs_size() const { return nn::Tensor::numel_of(obs_shape); }
  int code_dim() const {
    return size() ? static_cast<int>(mu.size()) / size() : 0;
  }

  // [n, ...obs_shape] tensor over the given row indices.
  nn::Tensor gather_observations(const std::vector<int>& rows) const;
  nn::Tensor gather_eps(const std::vector<int>& rows) const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// Standard GAE over step-major arrays; dones cut the recursion and the
// per-env bootstrap value closes the tail.
GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<uint8_t>& dones,
                      const std::vector<double>& bootstrap_values, int n_envs,
                      int n_steps, double gamma, double lambda);

}  // namespace ibrl::agents
