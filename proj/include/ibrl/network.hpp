#pragma once

#include <random>
#include <string>
#include <vector>

#include "ibrl/tape.hpp"
#include "ibrl/tensor.hpp"

namespace ibrl::nn {

enum class Activation { Tanh, Relu, Identity };
enum class LayerKind { Dense, Conv2x2 };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int size = 0;  // dense output width or conv output channels
  Activation act = Activation::Tanh;
  double gain = -1.0;  // <0 means the default for the activation
};

struct NetworkSpec {
  std::vector<int> input_shape;  // [d] for dense chains, [h,w,c] for conv
  std::vector<LayerSpec> layers;
};

struct Layer {
  LayerKind kind;
  Activation act;
  Tensor weight;
  Tensor bias;
  // input geometry for conv layers
  int in_h = 0, in_w = 0, in_c = 0;
};

// A feed-forward chain: optional conv block followed by dense layers.
class Network {
 public:
  Network() = default;

  std::vector<Layer> layers;
  std::vector<int> input_shape;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  void zero_grads();

  // Recorded forward through a tape; input is [n, ...input_shape].
  Var forward(Tape& tape, Var input) const;

  // Plain evaluation without recording (rollouts, evaluation).
  Tensor eval(const Tensor& input) const;

  int output_dim() const;
};

// Builds a network with orthogonal weight init and zero biases,
// deterministic in the rng state. Throws ConfigError on malformed specs.
Network build_network(const NetworkSpec& spec, std::mt19937_64& rng);

// Orthogonal init of a [rows, cols] matrix scaled by gain.
void orthogonal_init(Tensor& w, double gain, std::mt19937_64& rng);

// Max over parameters of |analytic - numeric| / max(|a|,|n|,1e-8), with
// numeric gradients from central differences of loss_fn. loss_fn must
// evaluate the full forward-to-scalar pipeline from current parameters.
double finite_diff_check(std::vector<Tensor*> params,
                         const std::function<double()>& loss_fn,
                         const std::function<void()>& grad_fn, double h);

}  // namespace ibrl::nn
