#include "ibrl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "ibrl/env_cartpole.hpp"
#include "ibrl/env_grid.hpp"

namespace ibrl::policy {

using nn::Activation;
using nn::LayerKind;
using nn::LayerSpec;
using nn::NetworkSpec;
using nn::Tape;
using nn::Tensor;
using nn::Var;

std::vector<Tensor*> PolicyBundle::parameters() {
  std::vector<Tensor*> out;
  for (nn::Network* net :
       {&trunk, &mu_head, &logvar_head, &actor, &critic}) {
    if (net == &logvar_head && deterministic) continue;
    auto ps = net->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

std::vector<const Tensor*> PolicyBundle::parameters() const {
  std::vector<const Tensor*> out;
  for (const nn::Network* net :
       {&trunk, &mu_head, &logvar_head, &actor, &critic}) {
    if (net == &logvar_head && deterministic) continue;
    auto ps = net->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

std::vector<Tensor*> PolicyBundle::encoder_parameters() {
  std::vector<Tensor*> out;
  for (nn::Network* net : {&trunk, &mu_head, &logvar_head}) {
    if (net == &logvar_head && deterministic) continue;
    auto ps = net->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

namespace {

// Annealing starts from an effectively deterministic encoder (sigma ~ 7e-3,
// well above the clamp floor): small weights keep the initial log-variance
// nearly state-independent and the strongly negative bias silences the
// sampling noise. With sigma ~ 0 the reward gradient through z vanishes on
// this head, so the KL term alone grows sigma back -- the "gradually
// injecting noise" behavior the annealing scheme relies on.
nn::Network build_logvar_head(const NetworkSpec& mu_spec,
                              std::mt19937_64& rng) {
  NetworkSpec spec = mu_spec;
  spec.layers.back().gain = 0.01;
  nn::Network net = nn::build_network(spec, rng);
  for (double& b : net.layers.back().bias.data) b = -10.0;
  return net;
}

}  // namespace

PolicyBundle make_grid_policy(uint64_t seed, bool deterministic) {
  std::mt19937_64 rng(seed);
  PolicyBundle b;
  b.code_dim = 64;
  b.action_count = env::kGridActions;
  b.deterministic = deterministic;
  b.obs_shape = {env::kGridSize, env::kGridSize, env::kGridChannels};

  // ReLU hidden layers throughout: the grid observation is dominated by a
  // per-maze-constant wall pattern, and tanh hidden units trap the policy in
  // a saturated constant-logits minimum (gradient vanishes at the action
  // marginal). ReLU has no such two-sided trap.
  NetworkSpec trunk;
  trunk.input_shape = b.obs_shape;
  trunk.layers = {{LayerKind::Conv2x2, 16, Activation::Relu},
                  {LayerKind::Conv2x2, 32, Activation::Relu},
                  {LayerKind::Conv2x2, 64, Activation::Relu}};
  b.trunk = nn::build_network(trunk, rng);
  const int feat = b.trunk.output_dim();

  NetworkSpec head;
  head.input_shape = {feat};
  head.layers = {{LayerKind::Dense, 64, Activation::Identity}};
  b.mu_head = nn::build_network(head, rng);
  if (!deterministic) b.logvar_head = build_logvar_head(head, rng);

  NetworkSpec actor;
  actor.input_shape = {64};
  actor.layers = {{LayerKind::Dense, 64, Activation::Relu},
                  {LayerKind::Dense, 4, Activation::Identity, 0.01}};
  b.actor = nn::build_network(actor, rng);

  NetworkSpec critic;
  critic.input_shape = {64};
  critic.layers = {{LayerKind::Dense, 64, Activation::Relu},
                   {LayerKind::Dense, 1, Activation::Identity, 1.0}};
  b.critic = nn::build_network(critic, rng);
  return b;
}

PolicyBundle make_cartpole_policy(uint64_t seed, bool deterministic) {
  std::mt19937_64 rng(seed);
  PolicyBundle b;
  b.code_dim = 32;
  b.action_count = env::kCartPoleActions;
  b.deterministic = deterministic;
  b.obs_shape = {env::kCartPoleObsDim};

  NetworkSpec trunk;
  trunk.input_shape = {env::kCartPoleObsDim};
  trunk.layers = {{LayerKind::Dense, 32, Activation::Tanh}};
  b.trunk = nn::build_network(trunk, rng);

  NetworkSpec head;
  head.input_shape = {32};
  head.layers = {{LayerKind::Dense, 32, Activation::Identity}};
  b.mu_head = nn::build_network(head, rng);
  if (!deterministic) b.logvar_head = build_logvar_head(head, rng);

  NetworkSpec actor;
  actor.input_shape = {32};
  actor.layers = {{LayerKind::Dense, 32, Activation::Tanh},
                  {LayerKind::Dense, 32, Activation::Tanh},
                  {LayerKind::Dense, 2, Activation::Identity, 0.01}};
  b.actor = nn::build_network(actor, rng);

  NetworkSpec critic;
  critic.input_shape = {32};
  critic.layers = {{LayerKind::Dense, 32, Activation::Tanh},
                   {LayerKind::Dense, 32, Activation::Tanh},
                   {LayerKind::Dense, 1, Activation::Identity, 1.0}};
  b.critic = nn::build_network(critic, rng);
  return b;
}

GaussianCode encode(const PolicyBundle& bundle, const nn::Tensor& obs) {
  std::vector<int> expect = {1};
  expect.insert(expect.end(), bundle.obs_shape.begin(),
                bundle.obs_shape.end());
  if (obs.shape != expect)
    throw NumericError("encode: observation shape " + obs.shape_str() +
                       " does not match policy input");
  Tensor feat = bundle.trunk.eval(obs);
  if (feat.shape.size() > 2) {
    const int d = static_cast<int>(feat.numel());
    feat = Tensor({1, d}, std::move(feat.data));
  }
  Tensor mu = bundle.mu_head.eval(feat);
  GaussianCode code;
  code.mu = mu.data;
  if (!bundle.deterministic) {
    Tensor logvar = bundle.logvar_head.eval(feat);
    code.sigma.resize(logvar.data.size());
    for (size_t i = 0; i < logvar.data.size(); ++i)
      code.sigma[i] =
          std::clamp(std::exp(0.5 * logvar.data[i]), kSigmaFloor, kSigmaCeil);
  }
  return code;
}

std::vector<double> sample_code(const GaussianCode& code,
                                std::mt19937_64& rng, CodeMode mode,
                                std::vector<double>* eps_out) {
  if (mode == CodeMode::Mean || code.sigma.empty()) {
    if (eps_out) eps_out->assign(code.mu.size(), 0.0);
    return code.mu;
  }
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> z(code.mu.size());
  if (eps_out) eps_out->resize(code.mu.size());
  for (size_t i = 0; i < z.size(); ++i) {
    const double eps = nd(rng);
    if (eps_out) (*eps_out)[i] = eps;
    z[i] = code.mu[i] + code.sigma[i] * eps;
  }
  return z;
}

ActionDistribution act(const PolicyBundle& bundle,
                       const std::vector<double>& z) {
  if (static_cast<int>(z.size()) != bundle.code_dim)
    throw NumericError("act: code dimension mismatch");
  Tensor zin({1, bundle.code_dim}, z);
  Tensor logits = bundle.actor.eval(zin);
  ActionDistribution dist;
  dist.logits = logits.data;
  double mx = dist.logits[0];
  for (double v : dist.logits) mx = std::max(mx, v);
  double sum = 0.0;
  dist.probs.resize(dist.logits.size());
  for (size_t i = 0; i < dist.logits.size(); ++i) {
    dist.probs[i] = std::exp(dist.logits[i] - mx);
    sum += dist.probs[i];
  }
  for (auto& p : dist.probs) p /= sum;
  return dist;
}

double value(const PolicyBundle& bundle, const std::vector<double>& z) {
  Tensor zin({1, bundle.code_dim}, z);
  return bundle.critic.eval(zin).data[0];
}

EncodedBatch encode_batch(Tape& tape, const PolicyBundle& bundle,
                          const nn::Tensor& obs_batch,
                          const nn::Tensor& eps_batch, bool stochastic_z) {
  Var obs = tape.constant(obs_batch);
  Var feat = bundle.trunk.forward(tape, obs);
  if (tape.value(feat).shape.size() > 2) feat = tape.flatten_rows(feat);
  EncodedBatch out;
  out.mu = bundle.mu_head.forward(tape, feat);
  if (!bundle.deterministic) {
    Var logvar = bundle.logvar_head.forward(tape, feat);
    out.sigma = tape.clamp(tape.exp_(tape.scale(logvar, 0.5)), kSigmaFloor,
                           kSigmaCeil);
  }
  if (!bundle.deterministic && stochastic_z) {
    Var eps = tape.constant(eps_batch);
    out.z = tape.add(out.mu, tape.mul(out.sigma, eps));
  } else {
    out.z = out.mu;
  }
  return out;
}

Var actor_logits(Tape& tape, const PolicyBundle& bundle, Var z) {
  return bundle.actor.forward(tape, z);
}

Var critic_values(Tape& tape, const PolicyBundle& bundle, Var z) {
  return bundle.critic.forward(tape, z);
}

}  // namespace ibrl::policy
