#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "ibrl/tensor.hpp"

namespace ibrl::nn {

// Reverse-mode tape. Operations append nodes in evaluation order; backward
// walks the tape in reverse once. Parameter leaves accumulate into the
// grad slot of the Tensor they wrap, everything else keeps its adjoint
// inside the tape.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  // Leaf over a parameter tensor; gradients land in param->grad.
  Var param(Tensor* p);
  // Leaf with no gradient (inputs, frozen samples, advantages).
  Var constant(Tensor value);

  // Layer primitives. x: [n, k], w: [k, m], b: [m] -> [n, m]
  Var dense(Var x, Var w, Var b);
  // x: [n,h,w,cin], w: [2,2,cin,cout], b: [cout] -> [n,h-1,w-1,cout]
  Var conv2x2(Var x, Var w, Var b);
  Var flatten_rows(Var x);  // [n, d1, d2, ...] -> [n, d1*d2*...]

  // Elementwise.
  Var tanh_(Var x);
  Var relu(Var x);
  Var exp_(Var x);
  Var square(Var x);
  Var clamp(Var x, double lo, double hi);  // zero gradient outside [lo,hi]
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var min_(Var a, Var b);
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  Var add_rowvec(Var x, Var v);  // [n,m] + [m]

  // Reductions to scalars ([1]).
  Var sum(Var x);
  Var mean(Var x);

  // Fused heads over [n, A] logits.
  // log-probability of the chosen action per row -> [n]
  Var categorical_logprob(Var logits, const std::vector<int>& actions);
  // Shannon entropy of softmax(logits) per row -> [n]
  Var categorical_entropy(Var logits);
  // Row-wise KL( N(mu, diag sigma^2) || N(0, I) ) in nats -> [n]
  Var gaussian_kl(Var mu, Var sigma);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const std::vector<double>& adjoint(Var v) const { return nodes_[v.id].adj; }

  // Populates grads of all reachable parameter tensors. Requires a scalar
  // loss; a second call without fresh recording throws.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> adj;
    Tensor* leaf = nullptr;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(Tensor value, std::function<void(Tape&)> back);
  std::vector<double>& adj(int id);
  void want_grad(int id) { nodes_[id].adj.assign(nodes_[id].value.data.size(), 0.0); }

  std::vector<Node> nodes_;
  std::unordered_map<Tensor*, int> param_ids_;
  bool consumed_ = false;

  friend class Network;
};

using Var = Tape::Var;

}  // namespace ibrl::nn
