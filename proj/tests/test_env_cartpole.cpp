#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ibrl/env_cartpole.hpp"

using namespace ibrl;
using namespace ibrl::env;

namespace {

// Clean-room reimplementation of the cart-pole update used as the
// integrator oracle: same physical constants, independently coded.
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

}  // namespace

TEST_CASE("context construction and grids") {
  CartPoleContext canon(10.0, 0.5);
  CHECK(canon.force == 10.0);
  CHECK_THROWS_AS(CartPoleContext(-1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(CartPoleContext(10.0, 0.0), ConfigError);

  auto train = context_grid(GridKind::Train);
  CHECK(train.size() == 12);  // 4 forces x 3 lengths
  auto test = context_grid(GridKind::Test);
  CHECK(test.size() == 81);  // 9 x 9
  auto extreme = context_grid(GridKind::Extreme);
  CHECK(extreme.size() == 6);

  // Of the full 9x9 test grid only (force 10, length 0.5) sits inside the
  // train box.
  int unseen = 0;
  for (const auto& c : test)
    if (!in_train_box(c)) ++unseen;
  CHECK(unseen == 80);

  // The success-count metric runs on a fixed 20-cell unseen set: the test
  // cells farthest from the train box. Every selected cell must be at
  // least as distant as every excluded unseen cell.
  auto unseen20 = context_grid(GridKind::Unseen20);
  CHECK(unseen20.size() == 20);
  double min_selected = 1e9;
  for (const auto& c : unseen20) {
    CHECK(!in_train_box(c));
    min_selected = std::min(min_selected, context_distance(c));
  }
  const auto is_selected = [&](const CartPoleContext& c) {
    for (const auto& u : unseen20)
      if (u.force == c.force && u.half_length == c.half_length) return true;
    return false;
  };
  for (const auto& c : test)
    if (!in_train_box(c) && !is_selected(c))
      CHECK(context_distance(c) <= min_selected);
  CHECK(context_distance(CartPoleContext(10.0, 0.5)) == 0.0);
}

TEST_CASE("reset draws all components uniform in [-0.05, 0.05]") {
  CartPoleEnv env(CartPoleContext(10.0, 0.5));
  std::mt19937_64 rng(3);
  nn::Tensor obs = env.reset(rng);
  CHECK(obs.shape == std::vector<int>{1, 4});
  for (double v : obs.data) CHECK(std::abs(v) <= 0.05);
  std::mt19937_64 rng2(3);
  CartPoleEnv env2(CartPoleContext(10.0, 0.5));
  CHECK(env2.reset(rng2).data == obs.data);
}

TEST_CASE("physics step matches the clean-room integrator to 1e-10") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (const auto& ctx :
       {CartPoleContext(10.0, 0.5), CartPoleContext(7.0, 0.45),
        CartPoleContext(160.0, 6.8), CartPoleContext(1.0, 0.1)}) {
    for (int t = 0; t < 25; ++t) {
      std::array<double, 4> s{u(rng), u(rng), u(rng), u(rng)};
      for (int action : {0, 1}) {
        auto ours = CartPoleEnv::physics_step(s, ctx, action);
        auto ref = reference_step(s, ctx.force, ctx.half_length, action);
        for (int i = 0; i < 4; ++i)
          CHECK(std::abs(ours[i] - ref[i]) < 1e-10);
      }
    }
  }
}

TEST_CASE("physics step is bitwise deterministic") {
  CartPoleContext ctx(10.0, 0.5);
  std::array<double, 4> s{0.01, -0.02, 0.03, -0.04};
  auto a = CartPoleEnv::physics_step(s, ctx, 1);
  auto b = CartPoleEnv::physics_step(s, ctx, 1);
  CHECK(a == b);
}

TEST_CASE("termination: angle breach ends the episode") {
  CartPoleEnv env(CartPoleContext(10.0, 0.5));
  std::mt19937_64 rng(1);
  env.reset(rng);
  env.set_state({0.0, 0.0, 11.9 * M_PI / 180.0, 2.0});
  auto res = env.step(1);
  CHECK(res.done);
  CHECK_THROWS_AS(env.step(1), ArtifactError);
}

TEST_CASE("reward is 1 per step; horizon caps at 200") {
  CartPoleEnv env(CartPoleContext(10.0, 0.5));
  std::mt19937_64 rng(2);
  env.reset(rng);
  env.set_state({0.0, 0.0, 0.0, 0.0});
  // PD-style scripted controller on angle and angular velocity
  double total = 0.0;
  int steps = 0;
  while (!env.done()) {
    auto s = env.state();
    const int action = (s[2] + 0.5 * s[3] + 0.05 * s[0] + 0.1 * s[1]) > 0 ? 1 : 0;
    total += env.step(action).reward;
    ++steps;
  }
  CHECK(steps == kCartPoleHorizon);
  CHECK(total == 200.0);
}

TEST_CASE("scripted controller balances every training context") {
  for (const auto& ctx : context_grid(GridKind::Train)) {
    CartPoleEnv env(ctx);
    std::mt19937_64 rng(7);
    env.reset(rng);
    double total = 0.0;
    while (!env.done()) {
      auto s = env.state();
      const int action =
          (s[2] + 0.5 * s[3] + 0.05 * s[0] + 0.1 * s[1]) > 0 ? 1 : 0;
      total += env.step(action).reward;
    }
    CHECK(total == 200.0);
  }
}

TEST_CASE("zero-ish force lets the pole fall: integrator is not spuriously stable") {
  CartPoleEnv env(CartPoleContext(1e-9, 0.5));
  std::mt19937_64 rng(4);
  env.reset(rng);
  env.set_state({0.0, 0.0, 0.01, 0.0});
  double prev = 0.01;
  for (int i = 0; i < 40 && !env.done(); ++i) {
    env.step(1);
    const double cur = std::abs(env.state()[2]);
    CHECK(cur >= prev);
    prev = cur;
  }
  CHECK(prev > 0.011);
}

TEST_CASE("sampled training contexts stay inside the continuous ranges") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    auto c = sample_train_context(rng);
    CHECK(c.force >= 7.0);
    CHECK(c.force <= 13.0);
    CHECK(c.half_length >= 0.45);
    CHECK(c.half_length <= 0.55);
    CHECK(in_train_box(c));
  }
}
