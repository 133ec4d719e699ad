#include "ibrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibrl/ib.hpp"
#include "ibrl/tape.hpp"

namespace ibrl::agents {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("gamma must be in (0,1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0)
    throw ConfigError("gae_lambda must be in [0,1]");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (clip_range <= 0.0) throw ConfigError("clip_range must be > 0");
  if (minibatch_size <= 0) throw ConfigError("minibatch_size must be > 0");
  if (epochs <= 0) throw ConfigError("epochs must be > 0");
  if (n_envs <= 0) throw ConfigError("n_envs must be > 0");
  if (n_steps <= 0) throw ConfigError("n_steps must be > 0");
  if (total_steps <= 0) throw ConfigError("total_steps must be > 0");
  if (max_grad_norm <= 0.0) throw ConfigError("max_grad_norm must be > 0");
}

TrainConfig grid_train_config() {
  TrainConfig cfg;
  cfg.algo = Algo::A2C;
  cfg.learning_rate = 7e-4;
  cfg.n_envs = 16;
  cfg.n_steps = 5;
  cfg.advantage_norm = false;
  cfg.total_steps = 200000;
  return cfg;
}

TrainConfig cartpole_train_config() {
  TrainConfig cfg;
  cfg.algo = Algo::PPO;
  cfg.learning_rate = 3e-4;
  cfg.n_envs = 1;
  cfg.n_steps = 2048;
  cfg.minibatch_size = 128;
  cfg.epochs = 10;
  cfg.advantage_norm = true;
  cfg.total_steps = 300000;
  return cfg;
}

Trainer::Trainer(policy::PolicyBundle* bundle, EnvFactory factory,
                 TrainConfig cfg)
    : bundle_(bundle),
      cfg_(cfg),
      opt_(bundle->parameters(), {cfg.learning_rate}),
      rng_(cfg.seed) {
  cfg_.validate();
  for (int e = 0; e < cfg_.n_envs; ++e) {
    envs_.push_back(factory());
    env_rngs_.emplace_back(rng_());
  }
  episode_returns_.assign(cfg_.n_envs, 0.0);
}

static double logprob_of(const std::vector<double>& logits, int action) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  return logits[action] - mx - std::log(lse);
}

RolloutBatch Trainer::collect_rollouts(int n_steps, double beta,
                                       bool stochastic) {
  last_collect_stochastic_ = stochastic;
  if (current_obs_.empty()) {
    current_obs_.resize(cfg_.n_envs);
    for (int e = 0; e < cfg_.n_envs; ++e)
      current_obs_[e] = envs_[e]->reset(env_rngs_[e]);
  }

  RolloutBatch batch;
  batch.n_envs = cfg_.n_envs;
  batch.n_steps = n_steps;
  batch.obs_shape = bundle_->obs_shape;
  batch.beta = beta;
  const long osz = batch.obs_size();
  const int d = bundle_->code_dim;
  const long n = static_cast<long>(cfg_.n_envs) * n_steps;
  batch.observations.resize(n * osz);
  batch.mu.resize(n * d);
  batch.sigma.assign(n * d, 1.0);
  batch.z.resize(n * d);
  batch.eps.resize(n * d);
  batch.actions.resize(n);
  batch.log_probs.resize(n);
  batch.rewards.resize(n);
  batch.kls.resize(n);
  batch.modified_rewards.resize(n);
  batch.values.resize(n);
  batch.dones.resize(n);

  const auto mode =
      stochastic ? policy::CodeMode::Stochastic : policy::CodeMode::Mean;
  std::vector<double> eps;
  for (int t = 0; t < n_steps; ++t) {
    for (int e = 0; e < cfg_.n_envs; ++e) {
      const long i = static_cast<long>(t) * cfg_.n_envs + e;
      const Tensor& obs = current_obs_[e];
      std::copy(obs.data.begin(), obs.data.end(),
                batch.observations.begin() + i * osz);

      auto code = policy::encode(*bundle_, obs);
      const double kl =
          bundle_->deterministic ? 0.0 : ib::kl_to_unit_gaussian(code);
      auto z = policy::sample_code(code, env_rngs_[e], mode, &eps);
      std::copy(code.mu.begin(), code.mu.end(), batch.mu.begin() + i * d);
      if (!code.sigma.empty())
        std::copy(code.sigma.begin(), code.sigma.end(),
                  batch.sigma.begin() + i * d);
      std::copy(z.begin(), z.end(), batch.z.begin() + i * d);
      std::copy(eps.begin(), eps.end(), batch.eps.begin() + i * d);

      auto dist = policy::act(*bundle_, z);
      std::discrete_distribution<int> pick(dist.probs.begin(),
                                           dist.probs.end());
      const int a = pick(env_rngs_[e]);
      batch.actions[i] = a;
      batch.log_probs[i] = logprob_of(dist.logits, a);
      batch.values[i] = policy::value(*bundle_, z);

      auto step = envs_[e]->step(a);
      batch.rewards[i] = step.reward;
      batch.kls[i] = kl;
      batch.modified_rewards[i] = ib::modified_reward(step.reward, kl, beta);
      batch.dones[i] = step.done ? 1 : 0;

      episode_returns_[e] += step.reward;
      if (step.done) {
        completed_returns_.push_back(episode_returns_[e]);
        if (completed_returns_.size() > 100) completed_returns_.pop_front();
        episode_returns_[e] = 0.0;
        current_obs_[e] = envs_[e]->reset(env_rngs_[e]);
      } else {
        current_obs_[e] = std::move(step.observation);
      }
    }
  }

  batch.bootstrap_values.resize(cfg_.n_envs);
  for (int e = 0; e < cfg_.n_envs; ++e) {
    auto code = policy::encode(*bundle_, current_obs_[e]);
    auto z = policy::sample_code(code, env_rngs_[e], mode);
    batch.bootstrap_values[e] = policy::value(*bundle_, z);
  }
  env_steps_ += n;
  return batch;
}

UpdateDiagnostics Trainer::update_minibatch(
    const RolloutBatch& batch, const std::vector<int>& rows,
    const std::vector<double>& advantages, const std::vector<double>& returns,
    double beta, bool clip_ratio, bool stochastic) {
  const int n = static_cast<int>(rows.size());
  Tensor obs = batch.gather_observations(rows);
  Tensor eps = batch.gather_eps(rows);

  std::vector<int> actions(n);
  std::vector<double> adv(n), ret(n), old_logp(n);
  for (int r = 0; r < n; ++r) {
    actions[r] = batch.actions[rows[r]];
    adv[r] = advantages[rows[r]];
    ret[r] = returns[rows[r]];
    old_logp[r] = batch.log_probs[rows[r]];
  }
  if (clip_ratio && cfg_.advantage_norm && n > 1) {
    double m = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double s2 = 0.0;
    for (double a : adv) s2 += (a - m) * (a - m);
    const double sd = std::sqrt(s2 / n) + 1e-8;
    for (double& a : adv) a = (a - m) / sd;
  }

  Tape tape;
  auto enc = policy::encode_batch(tape, *bundle_, obs, eps, stochastic);
  Var logits = policy::actor_logits(tape, *bundle_, enc.z);
  Var logp = tape.categorical_logprob(logits, actions);
  Var advc = tape.constant(Tensor({n}, adv));

  Var policy_loss;
  if (clip_ratio) {
    Var ratio = tape.exp_(tape.sub(logp, tape.constant(Tensor({n}, old_logp))));
    Var surr1 = tape.mul(ratio, advc);
    Var surr2 = tape.mul(
        tape.clamp(ratio, 1.0 - cfg_.clip_range, 1.0 + cfg_.clip_range), advc);
    policy_loss = tape.scale(tape.mean(tape.min_(surr1, surr2)), -1.0);
  } else {
    policy_loss = tape.scale(tape.mean(tape.mul(logp, advc)), -1.0);
  }

  Var v = policy::critic_values(tape, *bundle_, enc.z);
  Var target = tape.constant(Tensor({n, 1}, ret));
  Var value_loss = tape.mean(tape.square(tape.sub(v, target)));
  Var entropy = tape.mean(tape.categorical_entropy(logits));

  Var total = tape.add(policy_loss, tape.scale(value_loss, cfg_.value_coef));
  total = tape.add(total, tape.scale(entropy, -cfg_.entropy_coef));
  Var kl_term;
  if (!bundle_->deterministic && beta != 0.0) {
    kl_term = tape.mean(tape.gaussian_kl(enc.mu, enc.sigma));
    total = tape.add(total, tape.scale(kl_term, beta));
  }

  UpdateDiagnostics diag;
  diag.policy_loss = tape.value(policy_loss).data[0];
  diag.value_loss = tape.value(value_loss).data[0];
  diag.entropy = tape.value(entropy).data[0];
  diag.mean_kl = kl_term.valid() ? tape.value(kl_term).data[0] : 0.0;
  diag.total_loss = tape.value(total).data[0];

  tape.backward(total);
  auto params = bundle_->parameters();
  diag.grad_norm = nn::clip_grad_norm(params, cfg_.max_grad_norm);
  opt_.step();
  return diag;
}

UpdateDiagnostics Trainer::a2c_update(const RolloutBatch& batch, double beta) {
  auto gae = compute_gae(batch.modified_rewards, batch.values, batch.dones,
                         batch.bootstrap_values, batch.n_envs, batch.n_steps,
                         cfg_.gamma, cfg_.gae_lambda);
  std::vector<int> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  return update_minibatch(batch, rows, gae.advantages, gae.returns, beta,
                          /*clip_ratio=*/false, last_collect_stochastic_);
}

UpdateDiagnostics Trainer::ppo_update(const RolloutBatch& batch, double beta) {
  auto gae = compute_gae(batch.modified_rewards, batch.values, batch.dones,
                         batch.bootstrap_values, batch.n_envs, batch.n_steps,
                         cfg_.gamma, cfg_.gae_lambda);
  std::vector<int> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);

  UpdateDiagnostics avg;
  int count = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(rows.begin(), rows.end(), rng_);
    for (size_t start = 0; start < rows.size();
         start += static_cast<size_t>(cfg_.minibatch_size)) {
      const size_t end =
          std::min(rows.size(), start + static_cast<size_t>(cfg_.minibatch_size));
      std::vector<int> mb(rows.begin() + start, rows.begin() + end);
      auto diag =
          update_minibatch(batch, mb, gae.advantages, gae.returns, beta,
                           /*clip_ratio=*/true, last_collect_stochastic_);
      avg.policy_loss += diag.policy_loss;
      avg.value_loss += diag.value_loss;
      avg.entropy += diag.entropy;
      avg.mean_kl += diag.mean_kl;
      avg.total_loss += diag.total_loss;
      avg.grad_norm += diag.grad_norm;
      ++count;
    }
  }
  if (count) {
    avg.policy_loss /= count;
    avg.value_loss /= count;
    avg.entropy /= count;
    avg.mean_kl /= count;
    avg.total_loss /= count;
    avg.grad_norm /= count;
  }
  return avg;
}

double Trainer::recent_mean_return() const {
  if (completed_returns_.empty()) return 0.0;
  return std::accumulate(completed_returns_.begin(), completed_returns_.end(),
                         0.0) /
         static_cast<double>(completed_returns_.size());
}

std::vector<MetricsRow> Trainer::train(const BetaSchedule& beta_at,
                                       const TrainHooks& hooks) {
  std::vector<MetricsRow> log;
  while (env_steps_ < cfg_.total_steps) {
    const double beta = beta_at ? beta_at(env_steps_) : 0.0;
    const bool stochastic =
        hooks.stochastic_at ? hooks.stochastic_at(env_steps_) : true;
    auto batch = collect_rollouts(cfg_.n_steps, beta, stochastic);
    auto diag = cfg_.algo == Algo::A2C ? a2c_update(batch, beta)
                                       : ppo_update(batch, beta);
    MetricsRow row;
    row.env_steps = env_steps_;
    row.mean_return = recent_mean_return();
    row.mean_kl = batch.size()
                      ? std::accumulate(batch.kls.begin(), batch.kls.end(),
                                        0.0) /
                            batch.size()
                      : 0.0;
    row.beta = beta;
    row.diag = diag;
    log.push_back(row);
    if (hooks.on_update) hooks.on_update(row);
    if (hooks.stop_when && hooks.stop_when(row)) break;
  }
  return log;
}

}  // namespace ibrl::agents
