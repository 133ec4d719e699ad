#include "ibrl/selfcheck.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "ibrl/env_cartpole.hpp"
#include "ibrl/ib.hpp"
#include "ibrl/network.hpp"
#include "ibrl/policy.hpp"
#include "ibrl/rollout.hpp"
#include "ibrl/tape.hpp"

namespace ibrl::selfcheck {

namespace {

// ---- (a) closed-form KL vs quadrature ----

double kl_quadrature_1d(double mu, double sigma) {
  const double lo = mu - 10.0 * sigma - 10.0;
  const double hi = mu + 10.0 * sigma + 10.0;
  const int n = 200001;
  const double dz = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = lo + i * dz;
    const double logp = -0.5 * std::pow((z - mu) / sigma, 2) -
                        std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
    const double logq = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::exp(logp) * (logp - logq) * dz;
  }
  return acc;
}

double check_kl(std::ostream& os) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> muD(-2.0, 2.0), sigD(0.2, 2.5);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> mu(4), sigma(4);
    double quad = 0.0;
    for (int j = 0; j < 4; ++j) {
      mu[j] = muD(rng);
      sigma[j] = sigD(rng);
      quad += kl_quadrature_1d(mu[j], sigma[j]);  // diagonal: KLs add
    }
    worst = std::max(worst, std::abs(ib::kl_to_unit_gaussian(mu, sigma) - quad));
  }
  os << "  kl closed form vs quadrature          max err " << worst << "\n";
  return worst;
}

// ---- (b) finite-difference gradients on the four networks ----

double fd_check_net(nn::Network& net, const nn::Tensor& input, double h) {
  auto loss_of = [&]() {
    nn::Tensor out = net.eval(input);
    double s = 0.0;
    for (double v : out.data) s += v * v;
    return s;
  };
  auto grads = [&]() {
    nn::Tape tape;
    nn::Var x = tape.constant(input);
    nn::Var y = net.forward(tape, x);
    tape.backward(tape.sum(tape.square(y)));
  };
  return nn::finite_diff_check(net.parameters(), loss_of, grads, h);
}

double check_gradients(std::ostream& os) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 0.5);
  double worst = 0.0;

  // h = 1e-4: small enough for O(h^2) truncation, large enough that the
  // difference quotient stays above the double rounding floor on the
  // tiniest gradient entries
  auto grid = policy::make_grid_policy(7, /*deterministic=*/false);
  nn::Tensor grid_obs({1, 12, 12, 3});
  for (double& v : grid_obs.data) v = N(rng);
  worst = std::max(worst, fd_check_net(grid.trunk, grid_obs, 1e-4));

  nn::Tensor code64({1, 64});
  for (double& v : code64.data) v = N(rng);
  worst = std::max(worst, fd_check_net(grid.actor, code64, 1e-4));

  auto cart = policy::make_cartpole_policy(7, /*deterministic=*/false);
  nn::Tensor cart_obs({1, 4});
  for (double& v : cart_obs.data) v = N(rng);
  worst = std::max(worst, fd_check_net(cart.trunk, cart_obs, 1e-4));

  nn::Tensor code32({1, 32});
  for (double& v : code32.data) v = N(rng);
  worst = std::max(worst, fd_check_net(cart.critic, code32, 1e-4));

  os << "  finite-difference gradients (4 nets)  max rel err " << worst
     << "\n";
  return worst;
}

// ---- (c) variational bound vs exact discrete MI ----

double check_bound(std::ostream& os) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> muD(-2.0, 2.0), sigD(0.3, 1.5);
  double worst_violation = -1e300;
  for (int trial = 0; trial < 5; ++trial) {
    const int n_states = 3 + trial;
    std::vector<double> probs(n_states, 1.0 / n_states);
    std::vector<double> mus(n_states), sigmas(n_states);
    std::vector<ib::GaussianCode> codes(n_states);
    for (int s = 0; s < n_states; ++s) {
      mus[s] = muD(rng);
      sigmas[s] = sigD(rng);
      codes[s] = {{mus[s]}, {sigmas[s]}, {}};
    }
    const double truth =
        ib::true_mi_discrete(probs, mus, sigmas, -25.0, 25.0, 200001);
    const double bound = ib::mi_upper_bound(codes).mean_kl;
    worst_violation = std::max(worst_violation, truth - bound);
  }
  os << "  variational bound vs exact MI         worst (MI - bound) "
     << worst_violation << "\n";
  return worst_violation;
}

// ---- (d) cart-pole step vs clean-room integrator ----

std::array<double, 4> reference_step(std::array<double, 4> s, double force_mag,
                                     double half_len, int action) {
  const double g = 9.8, mc = 1.0, mp = 0.1, tau = 0.02;
  const double f = (action == 1) ? force_mag : -force_mag;
  const double st = std::sin(s[2]), ct = std::cos(s[2]);
  const double mt = mc + mp;
  const double pml = mp * half_len;
  const double tmp = (f + pml * s[3] * s[3] * st) / mt;
  const double denom = half_len * (4.0 / 3.0 - (mp * ct * ct) / mt);
  const double th_acc = (g * st - ct * tmp) / denom;
  const double x_acc = tmp - pml * th_acc * ct / mt;
  std::array<double, 4> out = s;
  out[1] += tau * x_acc;
  out[0] += tau * out[1];
  out[3] += tau * th_acc;
  out[2] += tau * out[3];
  return out;
}

double check_physics(std::ostream& os) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> sD(-0.2, 0.2), fD(1.0, 160.0),
      lD(0.1, 6.8);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, 4> s = {sD(rng), sD(rng), sD(rng), sD(rng)};
    const env::CartPoleContext ctx(fD(rng), lD(rng));
    const int action = trial % 2;
    auto got = env::CartPoleEnv::physics_step(s, ctx, action);
    auto want = reference_step(s, ctx.force, ctx.half_length, action);
    for (int i = 0; i < 4; ++i)
      worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  os << "  cart-pole step vs clean-room oracle   max err " << worst << "\n";
  return worst;
}

// ---- (e) GAE vs direct summation ----

double check_gae(std::ostream& os) {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n_envs = 4, n_steps = 16;
  std::vector<double> r(n_envs * n_steps), v(n_envs * n_steps);
  std::vector<uint8_t> done(n_envs * n_steps, 0);
  std::vector<double> boot(n_envs);
  for (auto& x : r) x = U(rng);
  for (auto& x : v) x = U(rng);
  for (auto& x : boot) x = U(rng);
  for (int i = 0; i < n_envs * n_steps; ++i)
    if (U(rng) > 0.8) done[i] = 1;

  const double gamma = 0.99, lambda = 0.95;
  auto gae = agents::compute_gae(r, v, done, boot, n_envs, n_steps, gamma,
                                 lambda);
  double worst = 0.0;
  for (int e = 0; e < n_envs; ++e) {
    for (int t0 = 0; t0 < n_steps; ++t0) {
      double acc = 0.0, w = 1.0;
      for (int t = t0; t < n_steps; ++t) {
        const int i = t * n_envs + e;
        const bool terminal = done[i] != 0;
        double next_v = 0.0;
        if (!terminal)
          next_v = (t == n_steps - 1) ? boot[e] : v[(t + 1) * n_envs + e];
        acc += w * (r[i] + gamma * next_v - v[i]);
        if (terminal) break;
        w *= gamma * lambda;
      }
      worst = std::max(worst, std::abs(gae.advantages[t0 * n_envs + e] - acc));
    }
  }
  os << "  gae recursion vs direct summation     max err " << worst << "\n";
  return worst;
}

}  // namespace

bool run_selfcheck(std::ostream& os) {
  bool ok = true;
  auto report = [&](const char* name, double value, double limit) {
    const bool pass = value <= limit;
    os << (pass ? "  PASS " : "  FAIL ") << name << " (limit " << limit
       << ")\n";
    ok = ok && pass;
  };
  os << "selfcheck: numerical oracle suite\n";
  report("kl-quadrature", check_kl(os), 1e-6);
  report("gradient-fd", check_gradients(os), 1e-4);
  report("mi-bound", check_bound(os), 1e-6);
  report("cartpole-integrator", check_physics(os), 1e-10);
  report("gae-direct-sum", check_gae(os), 1e-12);
  os << (ok ? "selfcheck: all oracles hold\n" : "selfcheck: FAILURES\n");
  return ok;
}

}  // namespace ibrl::selfcheck
