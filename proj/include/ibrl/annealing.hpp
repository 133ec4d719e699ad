#pragma once

#include <limits>
#include <vector>

#include "ibrl/agents.hpp"
#include "ibrl/policy.hpp"

namespace ibrl::anneal {

enum class Ramp { Geometric, Linear };

// Beta ramp: zero (deterministic-code) warmup, then a monotone climb
// from beta_start to beta_end over the rest of the run.
struct AnnealSchedule {
  long total_steps = 0;
  double beta_start = 1e-7;
  double beta_end = 1e-3;
  double warmup_frac = 0.2;
  Ramp ramp = Ramp::Geometric;
  int n_checkpoints = 10;

  void validate() const;
  long warmup_steps() const;
  double beta_at(long step) const;  // throws ConfigError out of [0, total]
  // n_checkpoints step counts evenly spaced over the ramp; the last one
  // is total_steps.
  std::vector<long> checkpoint_steps() const;
};

struct FamilyEntry {
  long iteration = 0;
  double beta = 0.0;
  std::vector<nn::Tensor> params;  // flat snapshot, bundle parameter order
  double mean_train_return = 0.0;
  double mean_kl = 0.0;
  // filled in by the eval harness; negative / NaN mean "not evaluated yet"
  double unseen_success = -1.0;
  double mean_test_return = std::numeric_limits<double>::quiet_NaN();
};

// Ordered checkpoints of one annealing run: iterations strictly
// increasing, betas non-decreasing.
struct PolicyFamily {
  std::vector<FamilyEntry> entries;
};

// Trains the bundle once under the schedule, snapshotting parameters at
// the end of warmup and at each checkpoint step. Warmup collects z = mu;
// stochastic sampling switches on with the ramp.
PolicyFamily anneal_run(policy::PolicyBundle* bundle,
                        agents::EnvFactory factory, agents::TrainConfig cfg,
                        const AnnealSchedule& schedule);

enum class SelectCriterion { BestUnseenSuccess, BestMeanTestReward };

// Argmax under the criterion; ties go to the larger beta (stronger
// compression). Throws ArtifactError if entries lack evaluations.
const FamilyEntry& select_checkpoint(const PolicyFamily& family,
                                     SelectCriterion criterion);

// Copies a snapshot's parameters back into a structurally identical bundle.
void load_entry(policy::PolicyBundle* bundle, const FamilyEntry& entry);

std::vector<nn::Tensor> snapshot_params(const policy::PolicyBundle& bundle);

}  // namespace ibrl::anneal
