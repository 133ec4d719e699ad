#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ibrl/policy.hpp"

namespace ibrl::ckpt {

constexpr uint32_t kCheckpointVersion = 1;

// Versioned binary snapshot of a policy: little-endian 64-bit float blobs
// with shape headers, plus run identity (config hash, iteration, beta)
// and the rng state needed for deterministic continuation.
struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  uint64_t config_hash = 0;
  std::string environment;  // "grid" | "cartpole"
  bool deterministic = false;
  int64_t iteration = 0;
  double beta = 0.0;
  std::vector<std::pair<std::string, nn::Tensor>> blobs;
  std::string rng_state;
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // ArtifactError

// Names each bundle parameter (network/layer/role) and snapshots it.
Checkpoint make_checkpoint(const policy::PolicyBundle& bundle,
                           const std::string& environment,
                           uint64_t config_hash, int64_t iteration,
                           double beta);

// Rebuilds the right architecture from the checkpoint's environment tag
// and restores the parameter blobs into it.
policy::PolicyBundle restore_bundle(const Checkpoint& ck);

}  // namespace ibrl::ckpt
