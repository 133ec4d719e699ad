// ibrl: information-bottleneck-regularized RL toolkit.
//
// Subcommands: train, anneal, eval, transfer, export-embeddings, selfcheck.
// Exit codes: 0 success, 2 configuration error, 3 artifact error,
// 4 numeric fault.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibrl/agents.hpp"
#include "ibrl/annealing.hpp"
#include "ibrl/checkpoint.hpp"
#include "ibrl/config.hpp"
#include "ibrl/eval.hpp"
#include "ibrl/rundir.hpp"
#include "ibrl/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace ibrl;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  bool force = false;
  int64_t seed_override = -1;
  double beta_override = -1.0;
};

config::RunConfig load_with_overrides(const CommonOpts& opts) {
  config::RunConfig cfg = config::load_config(opts.config_path);
  if (opts.seed_override >= 0)
    cfg.seeds = {static_cast<uint64_t>(opts.seed_override)};
  if (opts.beta_override >= 0.0) cfg.beta = opts.beta_override;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (cfg.out_dir.empty()) cfg.out_dir = cfg.name;
  cfg.validate();
  return cfg;
}

policy::PolicyBundle make_bundle(const config::RunConfig& cfg, uint64_t seed) {
  if (cfg.environment == "grid")
    return policy::make_grid_policy(seed, cfg.deterministic);
  return policy::make_cartpole_policy(seed, cfg.deterministic);
}

agents::EnvFactory make_factory(const config::RunConfig& cfg, uint64_t seed) {
  if (cfg.environment == "grid") {
    std::vector<env::MazeLayout> pool;
    for (int i = 0; i < cfg.maze_count; ++i)
      pool.push_back(env::generate_maze(seed * 1000003ULL + i));
    return [pool] { return std::make_unique<agents::GridRLEnv>(pool); };
  }
  return [] { return std::make_unique<agents::CartPoleRLEnv>(); };
}

std::string metrics_header() {
  return "seed,env_steps,mean_return,mean_kl,beta,policy_loss,value_loss,"
         "entropy,total_loss,grad_norm\n";
}

void append_metrics(std::ostringstream& os, uint64_t seed,
                    const agents::MetricsRow& row) {
  os << seed << "," << row.env_steps << "," << row.mean_return << ","
     << row.mean_kl << "," << row.beta << "," << row.diag.policy_loss << ","
     << row.diag.value_loss << "," << row.diag.entropy << ","
     << row.diag.total_loss << "," << row.diag.grad_norm << "\n";
}

int cmd_train(const CommonOpts& opts) {
  config::RunConfig cfg = load_with_overrides(opts);
  rundir::RunDir rd = rundir::RunDir::create(cfg.out_dir, cfg, opts.force);

  std::ostringstream metrics;
  metrics.precision(17);
  metrics << metrics_header();
  for (uint64_t seed : cfg.seeds) {
    auto bundle = make_bundle(cfg, seed);
    agents::TrainConfig tcfg = cfg.train;
    tcfg.seed = seed;
    agents::Trainer trainer(&bundle, make_factory(cfg, seed), tcfg);
    agents::TrainHooks hooks;
    hooks.stochastic_at = [&](long) { return !cfg.deterministic; };
    hooks.on_update = [&](const agents::MetricsRow& row) {
      append_metrics(metrics, seed, row);
    };
    trainer.train([&](long) { return cfg.beta; }, hooks);

    auto ck = ckpt::make_checkpoint(bundle, cfg.environment, cfg.hash(),
                                    trainer.env_steps(), cfg.beta);
    const std::string rel =
        "checkpoints/final-s" + std::to_string(seed) + ".ckpt";
    ckpt::save_checkpoint(ck, (rd.root() / rel).string());
    rd.record_artifact(rel);
    std::cout << "seed " << seed << ": " << trainer.env_steps()
              << " steps, recent mean return " << trainer.recent_mean_return()
              << "\n";
  }
  rd.write_artifact("metrics.csv", metrics.str());
  rd.write_manifest();
  std::cout << "run directory: " << rd.root().string() << "\n";
  return 0;
}

int cmd_anneal(const CommonOpts& opts, bool eval_family) {
  config::RunConfig cfg = load_with_overrides(opts);
  if (cfg.deterministic)
    throw ConfigError("anneal requires a stochastic encoder "
                      "(deterministic = false)");
  rundir::RunDir rd = rundir::RunDir::create(cfg.out_dir, cfg, opts.force);

  std::ostringstream metrics;
  metrics.precision(17);
  metrics << metrics_header();
  for (uint64_t seed : cfg.seeds) {
    auto bundle = make_bundle(cfg, seed);
    agents::TrainConfig tcfg = cfg.train;
    tcfg.seed = seed;
    auto family = anneal::anneal_run(&bundle, make_factory(cfg, seed), tcfg,
                                     cfg.schedule);
    if (eval_family) {
      if (cfg.environment != "cartpole")
        throw ConfigError("--eval-family needs the cartpole context grid");
      eval::evaluate_family(family, bundle, env::GridKind::Unseen20,
                            seed + 7777);
    }

    nlohmann::json manifest = nlohmann::json::array();
    policy::PolicyBundle scratch = bundle;
    for (size_t i = 0; i < family.entries.size(); ++i) {
      const auto& e = family.entries[i];
      anneal::load_entry(&scratch, e);
      auto ck = ckpt::make_checkpoint(scratch, cfg.environment, cfg.hash(),
                                      e.iteration, e.beta);
      const std::string rel = "checkpoints/anneal-s" + std::to_string(seed) +
                              "-ck" + std::to_string(i) + ".ckpt";
      ckpt::save_checkpoint(ck, (rd.root() / rel).string());
      rd.record_artifact(rel);
      nlohmann::json entry = {{"iteration", e.iteration},
                              {"beta", e.beta},
                              {"checkpoint", rel},
                              {"mean_train_return", e.mean_train_return},
                              {"mean_kl", e.mean_kl}};
      if (eval_family) {
        entry["unseen_success"] = e.unseen_success;
        entry["mean_test_return"] = e.mean_test_return;
      }
      manifest.push_back(entry);
    }
    rd.write_artifact("eval/family-s" + std::to_string(seed) + ".json",
                      manifest.dump(2) + "\n");
    std::cout << "seed " << seed << ": family of " << family.entries.size()
              << " checkpoints\n";
  }
  rd.write_manifest();
  std::cout << "run directory: " << rd.root().string() << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& grid_kind,
             const std::string& maze_path, int episodes,
             const std::string& out_dir, bool force) {
  auto ck = ckpt::load_checkpoint(ckpt_path);
  auto bundle = ckpt::restore_bundle(ck);
  fs::path out = out_dir.empty() ? fs::path("eval-out") : fs::path(out_dir);
  if (fs::exists(out) && !force)
    throw ArtifactError("output directory " + out.string() +
                        " exists; pass --force to overwrite");
  fs::create_directories(out);

  if (!grid_kind.empty()) {
    if (ck.environment != "cartpole")
      throw ArtifactError("context-grid evaluation needs a cartpole "
                          "checkpoint, got environment '" +
                          ck.environment + "'");
    env::GridKind kind;
    if (grid_kind == "train")
      kind = env::GridKind::Train;
    else if (grid_kind == "test")
      kind = env::GridKind::Test;
    else if (grid_kind == "extreme")
      kind = env::GridKind::Extreme;
    else if (grid_kind == "unseen20")
      kind = env::GridKind::Unseen20;
    else
      throw ConfigError("--grid must be train|test|extreme|unseen20");
    auto grid = eval::eval_grid(bundle, kind, 424242, episodes);
    std::ofstream(out / "grid.csv") << eval::grid_to_csv(grid);
    std::ofstream(out / "grid.svg") << eval::grid_to_svg(grid);
    std::cout << "cells above 150 (excluding train box): "
              << eval::success_count(grid) << "\n";
    std::cout << "wrote " << (out / "grid.csv").string() << " and .svg\n";
  } else {
    if (ck.environment != "grid")
      throw ArtifactError("maze evaluation needs a grid checkpoint, got "
                          "environment '" +
                          ck.environment + "'");
    auto layout = env::layout_from_text(rundir::read_file(maze_path));
    const double mean = eval::evaluate_maze(bundle, layout, episodes, 424242);
    std::ofstream(out / "maze_eval.csv")
        << "maze,episodes,mean_return\n"
        << fs::path(maze_path).filename().string() << "," << episodes << ","
        << mean << "\n";
    std::cout << "mean return over " << episodes << " episodes: " << mean
              << "\n";
  }
  return 0;
}

int cmd_transfer(const CommonOpts& opts) {
  config::RunConfig cfg = load_with_overrides(opts);
  if (cfg.environment != "grid")
    throw ConfigError("transfer requires env = grid");
  rundir::RunDir rd = rundir::RunDir::create(cfg.out_dir, cfg, opts.force);

  for (uint64_t seed : cfg.seeds) {
    std::mt19937_64 rng(seed);
    auto split = env::sample_transfer_split(rng);
    for (size_t i = 0; i < split.train.size(); ++i)
      rd.write_artifact("eval/maze-s" + std::to_string(seed) + "-train" +
                            std::to_string(i) + ".txt",
                        env::layout_to_text(split.train[i]));
    rd.write_artifact("eval/maze-s" + std::to_string(seed) + "-test.txt",
                      env::layout_to_text(split.test));

    agents::TrainConfig budget = cfg.train;
    budget.seed = seed;
    auto curves = eval::transfer_experiment(eval::default_transfer_variants(),
                                            split, budget, budget);
    std::ostringstream csv;
    csv.precision(17);
    csv << eval::curves_to_csv(curves);
    rd.write_artifact("eval/transfer-s" + std::to_string(seed) + ".csv",
                      csv.str());
    for (const auto& c : curves)
      std::cout << "seed " << seed << " " << c.variant
                << ": steps to sustained 0.9 return = "
                << c.steps_to_reach(0.9) << "\n";
  }
  rd.write_manifest();
  std::cout << "run directory: " << rd.root().string() << "\n";
  return 0;
}

int cmd_export_embeddings(const std::string& ckpt_path,
                          const std::string& maze_path,
                          const std::string& out_path) {
  auto ck = ckpt::load_checkpoint(ckpt_path);
  auto bundle = ckpt::restore_bundle(ck);
  auto layout = env::layout_from_text(rundir::read_file(maze_path));
  auto dump = eval::export_embeddings(bundle, layout);
  const std::string csv = eval::embeddings_to_csv(dump);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + out_path);
  out << csv;
  std::cout << "wrote " << dump.rows.size() << " rows to " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"information-bottleneck-regularized RL toolkit"};
  app.require_subcommand(1);

  CommonOpts train_opts, anneal_opts, transfer_opts;
  bool eval_family = false;

  auto add_common = [](CLI::App* sub, CommonOpts& o, bool need_config) {
    auto* c = sub->add_option("--config", o.config_path, "config file path");
    if (need_config) c->required();
    sub->add_option("--seed", o.seed_override, "override the seed list");
    sub->add_option("--out", o.out_dir, "output run directory");
    sub->add_flag("--force", o.force, "overwrite an existing run directory");
  };

  auto* train = app.add_subcommand("train", "train a single policy");
  add_common(train, train_opts, true);
  train->add_option("--beta", train_opts.beta_override,
                    "override the KL penalty coefficient");

  auto* annealc = app.add_subcommand("anneal", "run a beta-annealing sweep");
  add_common(annealc, anneal_opts, true);
  annealc->add_flag("--eval-family", eval_family,
                    "attach unseen-grid evaluations to every checkpoint");

  std::string ckpt_path, grid_kind, maze_path, eval_out;
  int episodes = 20;
  bool eval_force = false;
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
  evalc->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  evalc->add_option("--grid", grid_kind,
                    "cartpole context grid: train|test|extreme|unseen20");
  evalc->add_option("--maze", maze_path, "maze text file (grid policies)");
  evalc->add_option("--episodes", episodes, "episodes per context");
  evalc->add_option("--out", eval_out, "output directory");
  evalc->add_flag("--force", eval_force, "overwrite existing outputs");

  auto* transfer = app.add_subcommand("transfer", "maze transfer experiment");
  add_common(transfer, transfer_opts, true);

  std::string emb_ckpt, emb_maze, emb_out = "embeddings.csv";
  auto* emb = app.add_subcommand("export-embeddings",
                                 "dump encoder codes for every maze state");
  emb->add_option("--checkpoint", emb_ckpt, "checkpoint file")->required();
  emb->add_option("--maze", emb_maze, "maze text file")->required();
  emb->add_option("--out", emb_out, "output csv path");

  auto* self = app.add_subcommand("selfcheck", "run the numerical oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::cout.precision(17);
    if (*train) return cmd_train(train_opts);
    if (*annealc) return cmd_anneal(anneal_opts, eval_family);
    if (*evalc) {
      if (grid_kind.empty() == maze_path.empty())
        throw ConfigError("eval needs exactly one of --grid or --maze");
      return cmd_eval(ckpt_path, grid_kind, maze_path, episodes, eval_out,
                      eval_force);
    }
    if (*transfer) return cmd_transfer(transfer_opts);
    if (*emb) return cmd_export_embeddings(emb_ckpt, emb_maze, emb_out);
    if (*self) return selfcheck::run_selfcheck(std::cout) ? 0 : 4;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric fault: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
