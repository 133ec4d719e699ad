#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ibrl/ib.hpp"
#include "ibrl/network.hpp"

namespace ibrl::policy {

using ib::GaussianCode;

constexpr double kSigmaFloor = 1e-4;
constexpr double kSigmaCeil = 10.0;

struct ActionDistribution {
  std::vector<double> logits;
  std::vector<double> probs;
};

// Encoder-decoder policy: stochastic Gaussian encoder (trunk + mu/logvar
// heads), categorical actor and scalar critic reading the code.
struct PolicyBundle {
  nn::Network trunk;
  nn::Network mu_head;
  nn::Network logvar_head;  // unused when deterministic
  nn::Network actor;
  nn::Network critic;
  int code_dim = 0;
  int action_count = 0;
  bool deterministic = false;
  std::vector<int> obs_shape;

  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  std::vector<nn::Tensor*> encoder_parameters();
};

// Appendix-accurate architectures for both environments.
PolicyBundle make_grid_policy(uint64_t seed, bool deterministic);
PolicyBundle make_cartpole_policy(uint64_t seed, bool deterministic);

// ---- evaluation path (no recording) ----

// obs has a leading batch axis of 1.
GaussianCode encode(const PolicyBundle& bundle, const nn::Tensor& obs);

enum class CodeMode { Stochastic, Mean };

// Stochastic: z = mu + sigma .* eps with eps ~ N(0,I) from rng; the drawn
// eps is written to *eps_out when given (frozen for the update pass).
std::vector<double> sample_code(const GaussianCode& code,
                                std::mt19937_64& rng, CodeMode mode,
                                std::vector<double>* eps_out = nullptr);

ActionDistribution act(const PolicyBundle& bundle,
                       const std::vector<double>& z);

double value(const PolicyBundle& bundle, const std::vector<double>& z);

// ---- recorded path (updates) ----

struct EncodedBatch {
  nn::Var mu;     // [n, code_dim]
  nn::Var sigma;  // [n, code_dim]; invalid when deterministic
  nn::Var z;      // [n, code_dim]
};

// eps is the frozen per-step noise from rollout collection; ignored when
// the bundle is deterministic or stochastic_z is false.
EncodedBatch encode_batch(nn::Tape& tape, const PolicyBundle& bundle,
                          const nn::Tensor& obs_batch,
                          const nn::Tensor& eps_batch, bool stochastic_z);

nn::Var actor_logits(nn::Tape& tape, const PolicyBundle& bundle, nn::Var z);
nn::Var critic_values(nn::Tape& tape, const PolicyBundle& bundle, nn::Var z);

}  // namespace ibrl::policy
