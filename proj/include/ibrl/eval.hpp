#pragma once

#include <string>
#include <vector>

#include "ibrl/agents.hpp"
#include "ibrl/annealing.hpp"
#include "ibrl/env_cartpole.hpp"
#include "ibrl/env_grid.hpp"
#include "ibrl/policy.hpp"

namespace ibrl::eval {

// Mean return over n_episodes full episodes, greedy actions, mean codes
// (z = mu) unless stochastic is set. Pure read of the bundle.
double evaluate_context(const policy::PolicyBundle& bundle,
                        const env::CartPoleContext& ctx, int n_episodes,
                        uint64_t seed, bool stochastic = false);

double evaluate_maze(const policy::PolicyBundle& bundle,
                     const env::MazeLayout& layout, int n_episodes,
                     uint64_t seed, bool stochastic = false);

// Mean return per evaluated context with the train-box mask. For the
// lattice kinds (Train/Test/Extreme) contexts is the forces x lengths
// product in row-major order; Unseen20 is a flat 20-cell set and must be
// read through contexts, not cell(fi, li).
struct EvalGrid {
  env::GridKind kind = env::GridKind::Test;
  std::vector<double> forces;   // axis labels (Test axes for Unseen20)
  std::vector<double> lengths;
  std::vector<env::CartPoleContext> contexts;
  std::vector<double> cells;        // parallel to contexts
  std::vector<uint8_t> train_mask;  // 1 inside the training box

  double cell(int fi, int li) const {
    return cells[fi * static_cast<int>(lengths.size()) + li];
  }
};

// Per-cell rng streams keyed by cell index: results are independent of
// evaluation order.
EvalGrid eval_grid(const policy::PolicyBundle& bundle, env::GridKind kind,
                   uint64_t seed, int n_episodes = 20,
                   bool stochastic = false);

// Cells above threshold, excluding the training box when unseen_only.
int success_count(const EvalGrid& grid, double threshold = 150.0,
                  bool unseen_only = true);

double grid_mean(const EvalGrid& grid, bool unseen_only);

// Fills unseen_success / mean_test_return on every family entry by
// loading each snapshot into a scratch bundle and running the given grid.
void evaluate_family(anneal::PolicyFamily& family,
                     const policy::PolicyBundle& prototype,
                     env::GridKind success_kind, uint64_t seed,
                     int n_episodes = 20);

// ---- maze transfer (Fig. 3 left) ----

struct TransferVariant {
  std::string name;        // "baseline", "ablation", "ib"
  double beta = 0.0;
  bool deterministic = false;  // baseline: deterministic encoder, beta 0
};

std::vector<TransferVariant> default_transfer_variants();

struct TransferPoint {
  long env_steps = 0;
  double mean_return = 0.0;  // in [0, 1]
};

struct TransferCurve {
  std::string variant;
  double beta = 0.0;
  std::vector<TransferPoint> points;
  // first env-step count at which the rolling mean return stays >= level;
  // -1 when never reached
  long steps_to_reach(double level) const;
};

// Pretrains each variant on the three train mazes, then retrains on the
// held-out maze with identical budgets and seeds, logging the curve.
// Stochastic-encoder variants anneal beta up to the variant's target over
// the first part of pretraining and then hold it; the deterministic
// baseline trains with z = mu throughout. When ib_out is given it receives
// the "ib" variant's post-retrain policy (for embedding export).
std::vector<TransferCurve> transfer_experiment(
    const std::vector<TransferVariant>& variants,
    const env::TransferSplit& split, agents::TrainConfig pretrain_cfg,
    agents::TrainConfig retrain_cfg, policy::PolicyBundle* ib_out = nullptr);

// ---- embedding export (Fig. 3 right) ----

struct EmbeddingRow {
  int row = 0;
  int col = 0;
  std::vector<double> mu;
  double value = 0.0;
  int greedy_action = 0;
};

struct EmbeddingDump {
  std::vector<EmbeddingRow> rows;  // one per free (non-wall) cell
};

EmbeddingDump export_embeddings(const policy::PolicyBundle& bundle,
                                const env::MazeLayout& layout);

// Exact tabular value iteration on the maze MDP (reward 1 on entering the
// goal, absorbing); returns V for every free cell in export order.
std::vector<double> value_iteration(const env::MazeLayout& layout,
                                    double gamma = 0.99);

double spearman_correlation(const std::vector<double>& a,
                            const std::vector<double>& b);

// ---- serialization ----

std::string grid_to_csv(const EvalGrid& grid);
// Standalone heatmap: cells on a 0 -> 200 color ramp, train box outlined.
std::string grid_to_svg(const EvalGrid& grid);
std::string curves_to_csv(const std::vector<TransferCurve>& curves);
std::string embeddings_to_csv(const EmbeddingDump& dump);

}  // namespace ibrl::eval
