#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ibrl/env_grid.hpp"
#include "ibrl/policy.hpp"

using namespace ibrl;
using policy::CodeMode;

TEST_CASE("grid bundle encodes (12,12,3) to a 64-dim code") {
  auto bundle = policy::make_grid_policy(7, false);
  env::GridEnv e(env::generate_maze(1));
  auto code = policy::encode(bundle, e.reset());
  CHECK(code.mu.size() == 64);
  CHECK(code.sigma.size() == 64);
  for (double s : code.sigma) {
    CHECK(s >= policy::kSigmaFloor);
    CHECK(s <= policy::kSigmaCeil);
  }
}

TEST_CASE("cartpole bundle encodes (4,) to a 32-dim code") {
  auto bundle = policy::make_cartpole_policy(7, false);
  nn::Tensor obs({1, 4}, {0.01, -0.02, 0.03, 0.0});
  auto code = policy::encode(bundle, obs);
  CHECK(code.mu.size() == 32);
  CHECK(code.sigma.size() == 32);
}

TEST_CASE("zero-initialized heads give mu=0, sigma=1") {
  auto bundle = policy::make_cartpole_policy(3, false);
  for (auto* p : bundle.mu_head.parameters())
    for (auto& v : p->data) v = 0.0;
  for (auto* p : bundle.logvar_head.parameters())
    for (auto& v : p->data) v = 0.0;
  nn::Tensor obs({1, 4}, {0.5, 0.5, 0.5, 0.5});
  auto code = policy::encode(bundle, obs);
  for (double m : code.mu) CHECK(m == 0.0);
  for (double s : code.sigma) CHECK(s == 1.0);
}

TEST_CASE("fresh stochastic bundles start effectively deterministic") {
  // The annealing scheme starts from a near-zero-noise encoder and lets the
  // KL term grow sigma; a fresh bundle must therefore sample with sigma
  // close to exp(-5), not 1.
  for (auto bundle : {policy::make_grid_policy(3, false),
                      policy::make_cartpole_policy(3, false)}) {
    nn::Tensor obs = bundle.obs_shape.size() == 1
                         ? nn::Tensor({1, 4}, {0.5, -0.5, 0.5, -0.5})
                         : env::GridEnv(env::generate_maze(1)).reset();
    auto code = policy::encode(bundle, obs);
    for (double s : code.sigma) {
      CHECK(s >= policy::kSigmaFloor);
      CHECK(s < 0.05);
    }
  }
}

TEST_CASE("wrong observation shape is rejected") {
  auto bundle = policy::make_cartpole_policy(7, false);
  nn::Tensor obs({1, 5});
  CHECK_THROWS_AS(policy::encode(bundle, obs), NumericError);
}

TEST_CASE("deterministic bundles have no sigma and z equals mu") {
  auto bundle = policy::make_cartpole_policy(7, true);
  nn::Tensor obs({1, 4}, {0.1, 0.2, 0.3, 0.4});
  auto code = policy::encode(bundle, obs);
  CHECK(code.sigma.empty());
  std::mt19937_64 rng(1);
  auto z = policy::sample_code(code, rng, CodeMode::Stochastic);
  CHECK(z == code.mu);
}

TEST_CASE("mean mode returns mu exactly; tiny sigma converges to mu") {
  ib::GaussianCode code{{1.0, -1.0}, {1e-12, 1e-12}, {}};
  std::mt19937_64 rng(5);
  auto mean = policy::sample_code(code, rng, CodeMode::Mean);
  CHECK(mean == code.mu);
  auto z = policy::sample_code(code, rng, CodeMode::Stochastic);
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(z[1] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("stochastic sampling is reproducible and matches moments") {
  ib::GaussianCode code{{1.0, -1.0}, {0.5, 2.0}, {}};
  std::mt19937_64 rng1(9), rng2(9);
  auto a = policy::sample_code(code, rng1, CodeMode::Stochastic);
  auto b = policy::sample_code(code, rng2, CodeMode::Stochastic);
  CHECK(a == b);

  const int n = 100000;
  std::mt19937_64 rng(17);
  double sum0 = 0.0, sum1 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto z = policy::sample_code(code, rng, CodeMode::Stochastic);
    sum0 += z[0];
    sum1 += z[1];
  }
  // empirical mean within 3 standard errors per coordinate
  CHECK(std::abs(sum0 / n - 1.0) < 3.0 * 0.5 / std::sqrt(double(n)));
  CHECK(std::abs(sum1 / n + 1.0) < 3.0 * 2.0 / std::sqrt(double(n)));
}

TEST_CASE("act: zero actor weights give the uniform distribution") {
  auto bundle = policy::make_cartpole_policy(7, false);
  for (auto* p : bundle.actor.parameters())
    for (auto& v : p->data) v = 0.0;
  std::vector<double> z(32, 0.3);
  auto dist = policy::act(bundle, z);
  CHECK(dist.probs.size() == 2);
  for (double p : dist.probs) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("act: probabilities form a categorical distribution") {
  auto grid = policy::make_grid_policy(7, false);
  std::vector<double> z(64, 0.1);
  auto dist = policy::act(grid, z);
  CHECK(dist.probs.size() == 4);
  double sum = 0.0;
  for (double p : dist.probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // log prob of an action equals log of its probability entry
  for (size_t a = 0; a < dist.probs.size(); ++a) {
    double mx = dist.logits[0];
    for (double l : dist.logits) mx = std::max(mx, l);
    double lse = 0.0;
    for (double l : dist.logits) lse += std::exp(l - mx);
    const double logp = dist.logits[a] - (mx + std::log(lse));
    CHECK(logp == doctest::Approx(std::log(dist.probs[a])).epsilon(1e-12));
  }
}

TEST_CASE("value: zero critic returns 0; critic gradient passes finite diff") {
  auto bundle = policy::make_cartpole_policy(7, false);
  for (auto* p : bundle.critic.parameters())
    for (auto& v : p->data) v = 0.0;
  std::vector<double> z(32, 0.7);
  CHECK(policy::value(bundle, z) == 0.0);

  auto b2 = policy::make_cartpole_policy(8, false);
  nn::Tensor zin({1, 32});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (auto& v : zin.data) v = nd(rng);
  auto loss_of = [&]() { return policy::value(b2, zin.data); };
  auto grads = [&]() {
    nn::Tape tape;
    auto v = policy::critic_values(tape, b2, tape.constant(zin));
    tape.backward(tape.sum(v));
  };
  CHECK(nn::finite_diff_check(b2.critic.parameters(), loss_of, grads, 1e-5) <
        1e-4);
}

TEST_CASE("gradients flow end to end: logprob -> z -> mu/sigma -> trunk") {
  auto bundle = policy::make_cartpole_policy(21, false);
  // lift the near-deterministic starting sigma to ~1 so the log-variance
  // gradients are well scaled for the finite-difference comparison
  for (double& b : bundle.logvar_head.layers.back().bias.data) b = 0.0;
  nn::Tensor obs({1, 4}, {0.3, -0.1, 0.05, 0.2});
  nn::Tensor eps({1, 32});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (auto& v : eps.data) v = nd(rng);
  const std::vector<int> actions{1};

  auto loss_of = [&]() {
    auto code = policy::encode(bundle, obs);
    std::vector<double> z(code.mu.size());
    for (size_t i = 0; i < z.size(); ++i)
      z[i] = code.mu[i] + code.sigma[i] * eps.data[i];
    auto dist = policy::act(bundle, z);
    return std::log(dist.probs[1]);
  };
  auto grads = [&]() {
    nn::Tape tape;
    auto enc = policy::encode_batch(tape, bundle, obs, eps, true);
    auto logits = policy::actor_logits(tape, bundle, enc.z);
    auto logp = tape.categorical_logprob(logits, actions);
    tape.backward(tape.sum(logp));
  };
  auto params = bundle.encoder_parameters();
  for (auto* p : params) p->zero_grad();
  // h=1e-4: the tiniest gradient entries (~1e-8) sit near the floating
  // point noise floor of central differences at smaller h
  CHECK(nn::finite_diff_check(params, loss_of, grads, 1e-4) < 1e-4);
  // and the gradient actually reaches the trunk (nonzero)
  double norm = 0.0;
  for (auto* p : bundle.trunk.parameters())
    for (double g : p->grad) norm += g * g;
  grads();
  norm = 0.0;
  for (auto* p : bundle.trunk.parameters())
    for (double g : p->grad) norm += g * g;
  CHECK(norm > 0.0);
}

TEST_CASE("deterministic bundle: encode-act is a pure function of obs") {
  auto bundle = policy::make_grid_policy(5, true);
  env::GridEnv e(env::generate_maze(2));
  nn::Tensor obs = e.reset();
  auto c1 = policy::encode(bundle, obs);
  auto c2 = policy::encode(bundle, obs);
  CHECK(c1.mu == c2.mu);
  auto d1 = policy::act(bundle, c1.mu);
  auto d2 = policy::act(bundle, c2.mu);
  CHECK(d1.probs == d2.probs);
}
