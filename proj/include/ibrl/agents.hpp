#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>

#include "ibrl/optim.hpp"
#include "ibrl/policy.hpp"
#include "ibrl/rollout.hpp"

namespace ibrl::agents {

enum class Algo { A2C, PPO };

struct TrainConfig {
  Algo algo = Algo::PPO;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double clip_range = 0.2;
  double max_grad_norm = 0.5;
  int minibatch_size = 128;
  int epochs = 10;          // PPO epochs per update
  int n_envs = 1;
  int n_steps = 2048;       // rollout length per env
  long total_steps = 300000;
  bool advantage_norm = true;  // PPO only
  uint64_t seed = 0;

  void validate() const;
};

// Table-2/3 defaults.
TrainConfig grid_train_config();
TrainConfig cartpole_train_config();

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_kl = 0.0;   // == mi_upper_bound of the batch codes
  double total_loss = 0.0;
  double grad_norm = 0.0;
};

struct MetricsRow {
  long env_steps = 0;
  double mean_return = 0.0;  // over recent completed episodes
  double mean_kl = 0.0;
  double beta = 0.0;
  UpdateDiagnostics diag;
};

using BetaSchedule = std::function<double(long env_steps)>;
struct TrainHooks {
  std::function<void(const MetricsRow&)> on_update;
  // stochastic code sampling toggle (annealing warmup collects z = mu)
  std::function<bool(long env_steps)> stochastic_at;
  // returning true after an update ends training early
  std::function<bool(const MetricsRow&)> stop_when;
};

// Owns the rollout/update loop for one policy on one environment family.
class Trainer {
 public:
  Trainer(policy::PolicyBundle* bundle, EnvFactory factory, TrainConfig cfg);

  RolloutBatch collect_rollouts(int n_steps, double beta, bool stochastic);
  UpdateDiagnostics a2c_update(const RolloutBatch& batch, double beta);
  UpdateDiagnostics ppo_update(const RolloutBatch& batch, double beta);

  // Alternates collect/update until total_steps; returns the metrics log.
  std::vector<MetricsRow> train(const BetaSchedule& beta_at,
                                const TrainHooks& hooks = {});

  nn::Adam& optimizer() { return opt_; }
  std::mt19937_64& rng() { return rng_; }
  long env_steps() const { return env_steps_; }
  double recent_mean_return() const;

 private:
  UpdateDiagnostics update_minibatch(const RolloutBatch& batch,
                                     const std::vector<int>& rows,
                                     const std::vector<double>& advantages,
                                     const std::vector<double>& returns,
                                     double beta, bool clip_ratio,
                                     bool stochastic);

  policy::PolicyBundle* bundle_;
  TrainConfig cfg_;
  nn::Adam opt_;
  std::vector<std::unique_ptr<RLEnv>> envs_;
  std::vector<std::mt19937_64> env_rngs_;
  std::mt19937_64 rng_;
  std::vector<nn::Tensor> current_obs_;
  std::vector<double> episode_returns_;  // running accumulator per env
  std::deque<double> completed_returns_;
  long env_steps_ = 0;
  bool last_collect_stochastic_ = true;
};

}  // namespace ibrl::agents
