#include "ibrl/annealing.hpp"

#include <cmath>

namespace ibrl::anneal {

void AnnealSchedule::validate() const {
  if (total_steps <= 0) throw ConfigError("anneal: total_steps must be > 0");
  if (beta_start <= 0.0)
    throw ConfigError("anneal: beta_start must be > 0 (warmup handles beta=0)");
  if (beta_start > beta_end)
    throw ConfigError("anneal: beta_start must be <= beta_end");
  if (warmup_frac < 0.0 || warmup_frac >= 1.0)
    throw ConfigError("anneal: warmup_frac must be in [0,1)");
  if (n_checkpoints <= 0)
    throw ConfigError("anneal: n_checkpoints must be > 0");
}

long AnnealSchedule::warmup_steps() const {
  return static_cast<long>(warmup_frac * static_cast<double>(total_steps));
}

double AnnealSchedule::beta_at(long step) const {
  validate();
  if (step < 0 || step > total_steps)
    throw ConfigError("anneal: step outside [0, total_steps]");
  const long w = warmup_steps();
  if (step < w) return 0.0;
  const double span = static_cast<double>(total_steps - w);
  const double frac = span > 0.0 ? static_cast<double>(step - w) / span : 1.0;
  if (ramp == Ramp::Linear)
    return beta_start + frac * (beta_end - beta_start);
  return beta_start * std::pow(beta_end / beta_start, frac);
}

std::vector<long> AnnealSchedule::checkpoint_steps() const {
  validate();
  const long w = warmup_steps();
  std::vector<long> out;
  for (int k = 1; k <= n_checkpoints; ++k) {
    const double frac = static_cast<double>(k) / n_checkpoints;
    out.push_back(w + static_cast<long>(std::llround(
                          frac * static_cast<double>(total_steps - w))));
  }
  out.back() = total_steps;
  return out;
}

std::vector<nn::Tensor> snapshot_params(const policy::PolicyBundle& bundle) {
  std::vector<nn::Tensor> out;
  for (const nn::Tensor* p : bundle.parameters()) {
    nn::Tensor copy(p->shape, p->data);
    out.push_back(std::move(copy));
  }
  return out;
}

void load_entry(policy::PolicyBundle* bundle, const FamilyEntry& entry) {
  auto params = bundle->parameters();
  if (params.size() != entry.params.size())
    throw ArtifactError("family entry parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape != entry.params[i].shape)
      throw ArtifactError("family entry parameter shape mismatch");
    params[i]->data = entry.params[i].data;
  }
}

PolicyFamily anneal_run(policy::PolicyBundle* bundle,
                        agents::EnvFactory factory, agents::TrainConfig cfg,
                        const AnnealSchedule& schedule) {
  schedule.validate();
  cfg.total_steps = schedule.total_steps;
  agents::Trainer trainer(bundle, std::move(factory), cfg);

  const long warmup = schedule.warmup_steps();
  auto checkpoints = schedule.checkpoint_steps();
  size_t next_ck = 0;
  bool warmup_logged = warmup == 0;

  PolicyFamily family;
  auto snapshot = [&](const agents::MetricsRow& row) {
    FamilyEntry e;
    e.iteration = row.env_steps;
    e.beta = row.beta;
    e.params = snapshot_params(*bundle);
    e.mean_train_return = row.mean_return;
    e.mean_kl = row.mean_kl;
    family.entries.push_back(std::move(e));
  };

  agents::TrainHooks hooks;
  hooks.stochastic_at = [&](long step) { return step >= warmup; };
  hooks.on_update = [&](const agents::MetricsRow& row) {
    if (!warmup_logged && row.env_steps >= warmup) {
      snapshot(row);  // end-of-warmup (deterministic-phase) entry
      warmup_logged = true;
      return;
    }
    while (next_ck < checkpoints.size() &&
           row.env_steps >= checkpoints[next_ck]) {
      snapshot(row);
      ++next_ck;
    }
  };

  trainer.train([&](long step) { return schedule.beta_at(step); }, hooks);
  if (next_ck < checkpoints.size()) {
    // total_steps not an exact multiple of the update size: close out the
    // family with the final parameters
    agents::MetricsRow row;
    row.env_steps = trainer.env_steps();
    row.beta = schedule.beta_at(std::min(trainer.env_steps(),
                                         schedule.total_steps));
    row.mean_return = trainer.recent_mean_return();
    snapshot(row);
  }
  return family;
}

const FamilyEntry& select_checkpoint(const PolicyFamily& family,
                                     SelectCriterion criterion) {
  if (family.entries.empty())
    throw ArtifactError("select_checkpoint: empty family");
  const FamilyEntry* best = nullptr;
  for (const auto& e : family.entries) {
    const double score = criterion == SelectCriterion::BestUnseenSuccess
                             ? e.unseen_success
                             : e.mean_test_return;
    if (criterion == SelectCriterion::BestUnseenSuccess && e.unseen_success < 0)
      throw ArtifactError("select_checkpoint: entry without unseen-success");
    if (criterion == SelectCriterion::BestMeanTestReward &&
        !std::isfinite(e.mean_test_return))
      throw ArtifactError("select_checkpoint: entry without test reward");
    const double best_score =
        best ? (criterion == SelectCriterion::BestUnseenSuccess
                    ? best->unseen_success
                    : best->mean_test_return)
             : -std::numeric_limits<double>::infinity();
    // >= : later entries have larger beta, ties break toward compression
    if (!best || score >= best_score) best = &e;
  }
  return *best;
}

}  // namespace ibrl::anneal
