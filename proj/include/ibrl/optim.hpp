#pragma once

#include <vector>

#include "ibrl/tensor.hpp"

namespace ibrl::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
};

// Standard Adam over a fixed parameter list. Moment slots are keyed by
// position, so the same list must be passed to every step.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg);

  // Applies one update from the grads currently on the tensors, then
  // clears them. Throws NumericError on non-finite gradients.
  void step();

  long step_count() const { return t_; }
  AdamConfig& config() { return cfg_; }

  // Serialization hooks for checkpoints.
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(long t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  std::vector<Tensor*> params_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Scales gradients in place so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm);

}  // namespace ibrl::nn
