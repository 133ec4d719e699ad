#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibrl/agents.hpp"
#include "ibrl/annealing.hpp"

namespace ibrl::config {

// One experiment definition: sectioned key=value text file, validated
// before any compute. Unknown sections or keys are rejected.
struct RunConfig {
  // [run]
  std::string name;
  std::string environment;  // "grid" | "cartpole"
  std::vector<uint64_t> seeds = {0};
  double beta = 0.0;
  bool deterministic = false;  // baseline encoder (z = mu, no logvar head)
  int maze_count = 3;          // grid only: training-pool size
  std::string out_dir;

  // [train] overrides on top of the per-environment defaults
  agents::TrainConfig train;

  // [anneal]
  anneal::AnnealSchedule schedule;

  void validate() const;
  // Canonical text form: every field in a fixed order. Hash and the
  // config.copy file are derived from this, so equal configs hash equal.
  std::string canonical_text() const;
  uint64_t hash() const;  // FNV-1a of canonical_text()
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

uint64_t fnv1a(const std::string& bytes);

}  // namespace ibrl::config
