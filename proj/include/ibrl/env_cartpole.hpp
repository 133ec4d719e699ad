#pragma once

#include <array>
#include <random>
#include <vector>

#include "ibrl/errors.hpp"
#include "ibrl/tensor.hpp"

namespace ibrl::env {

constexpr int kCartPoleObsDim = 4;
constexpr int kCartPoleActions = 2;
constexpr int kCartPoleHorizon = 200;

// Dynamics context: the randomized parameters.
struct CartPoleContext {
  double force = 10.0;        // push force magnitude, N
  double half_length = 0.5;   // pole half-length, m

  CartPoleContext() = default;
  CartPoleContext(double f, double l);
};

enum class GridKind { Train, Test, Extreme, Unseen20 };

// Train:    forces {7,9,11,13} x lengths {0.45,0.50,0.55}
// Test:     forces {1,5,...,40} x lengths {0.1,0.3,...,1.7} (9x9)
// Extreme:  forces {80,160} x lengths {1.7,3.4,6.8}
// Unseen20: the 20 Test cells farthest from the training box under
//           context_distance, the fixed out-of-training set behind the
//           success-count metric (not a lattice; forces/lengths give the
//           Test axes for this kind)
std::vector<double> context_forces(GridKind kind);
std::vector<double> context_lengths(GridKind kind);
std::vector<CartPoleContext> context_grid(GridKind kind);

// Euclidean distance from the training box, with force and length each
// normalized by the Test-grid span; 0 inside the box.
double context_distance(const CartPoleContext& c);

// True iff the context lies inside the training box (inclusive).
bool in_train_box(const CartPoleContext& c);

// Uniform draw from the continuous training ranges.
CartPoleContext sample_train_context(std::mt19937_64& rng);

class CartPoleEnv {
 public:
  explicit CartPoleEnv(CartPoleContext context);

  nn::Tensor reset(std::mt19937_64& rng);

  struct StepResult {
    nn::Tensor observation;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action);  // 0 push left, 1 push right

  bool done() const { return done_; }
  int step_count() const { return steps_; }
  const CartPoleContext& context() const { return ctx_; }
  std::array<double, 4> state() const { return state_; }
  void set_state(const std::array<double, 4>& s) { state_ = s; }

  nn::Tensor observation() const;

  // One physics update of (x, xdot, theta, thetadot); exposed so the
  // clean-room integrator test can drive identical states.
  static std::array<double, 4> physics_step(const std::array<double, 4>& s,
                                            const CartPoleContext& ctx,
                                            int action);

 private:
  CartPoleContext ctx_;
  std::array<double, 4> state_{};
  int steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace ibrl::env
