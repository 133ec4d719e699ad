#include "ibrl/network.hpp"

#include <algorithm>
#include <cmath>

#include "ibrl/kernels.hpp"

namespace ibrl::nn {

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void Network::zero_grads() {
  for (auto* p : parameters()) p->zero_grad();
}

int Network::output_dim() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  const Layer& last = layers.back();
  if (last.kind == LayerKind::Dense) return last.weight.shape[1];
  return (last.in_h - 1) * (last.in_w - 1) * last.weight.shape[3];
}

Var Network::forward(Tape& tape, Var input) const {
  Var x = input;
  bool in_conv = !layers.empty() && layers.front().kind == LayerKind::Conv2x2;
  for (const auto& l : layers) {
    Var w = tape.param(const_cast<Tensor*>(&l.weight));
    Var b = tape.param(const_cast<Tensor*>(&l.bias));
    if (l.kind == LayerKind::Conv2x2) {
      x = tape.conv2x2(x, w, b);
    } else {
      if (in_conv) {
        x = tape.flatten_rows(x);
        in_conv = false;
      }
      x = tape.dense(x, w, b);
    }
    switch (l.act) {
      case Activation::Tanh: x = tape.tanh_(x); break;
      case Activation::Relu: x = tape.relu(x); break;
      case Activation::Identity: break;
    }
  }
  return x;
}

Tensor Network::eval(const Tensor& input) const {
  namespace k = kernels;
  Tensor x = input;
  bool in_conv = !layers.empty() && layers.front().kind == LayerKind::Conv2x2;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::Conv2x2) {
      const int n = x.shape[0], h = x.shape[1], w = x.shape[2],
                cin = x.shape[3];
      const int cout = l.weight.shape[3];
      Tensor y({n, h - 1, w - 1, cout});
      k::conv2x2_forward(x.data.data(), l.weight.data.data(),
                         l.bias.data.data(), y.data.data(), n, h, w, cin,
                         cout);
      x = std::move(y);
    } else {
      if (in_conv) {
        const int n = x.shape[0];
        const int d = static_cast<int>(x.numel() / n);
        x = Tensor({n, d}, std::move(x.data));
        in_conv = false;
      }
      const int n = x.shape[0], kk = x.shape[1], m = l.weight.shape[1];
      if (kk != l.weight.shape[0])
        throw NumericError("eval: input width " + std::to_string(kk) +
                           " vs weight " + l.weight.shape_str());
      Tensor y({n, m});
      for (int i = 0; i < n; ++i)
        std::copy(l.bias.data.begin(), l.bias.data.end(),
                  y.data.begin() + static_cast<long>(i) * m);
      k::gemm_nn(x.data.data(), l.weight.data.data(), y.data.data(), n, kk, m);
      x = std::move(y);
    }
    if (l.act == Activation::Tanh)
      for (auto& v : x.data) v = std::tanh(v);
    else if (l.act == Activation::Relu)
      for (auto& v : x.data) v = std::max(0.0, v);
  }
  check_finite(x, "network eval output");
  return x;
}

void orthogonal_init(Tensor& w, double gain, std::mt19937_64& rng) {
  if (w.shape.size() != 2) throw ConfigError("orthogonal_init expects matrix");
  const int rows = w.shape[0], cols = w.shape[1];
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  std::normal_distribution<double> nd(0.0, 1.0);
  // Gaussian matrix [big, small], orthonormalized columns via modified
  // Gram-Schmidt, then transposed if needed so rows x cols comes out.
  std::vector<double> a(static_cast<size_t>(big) * small);
  for (auto& v : a) v = nd(rng);
  for (int j = 0; j < small; ++j) {
    for (int p = 0; p < j; ++p) {
      double dot = 0.0;
      for (int i = 0; i < big; ++i)
        dot += a[static_cast<long>(i) * small + p] *
               a[static_cast<long>(i) * small + j];
      for (int i = 0; i < big; ++i)
        a[static_cast<long>(i) * small + j] -=
            dot * a[static_cast<long>(i) * small + p];
    }
    double norm = 0.0;
    for (int i = 0; i < big; ++i) {
      const double v = a[static_cast<long>(i) * small + j];
      norm += v * v;
    }
    norm = std::sqrt(std::max(norm, 1e-300));
    for (int i = 0; i < big; ++i) a[static_cast<long>(i) * small + j] /= norm;
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      w.data[static_cast<long>(r) * cols + c] =
          gain * (rows >= cols ? a[static_cast<long>(r) * small + c]
                               : a[static_cast<long>(c) * small + r]);
}

Network build_network(const NetworkSpec& spec, std::mt19937_64& rng) {
  if (spec.layers.empty()) throw ConfigError("network spec has no layers");
  if (spec.input_shape.empty())
    throw ConfigError("network spec missing input shape");
  Network net;
  net.input_shape = spec.input_shape;

  bool conv_phase = spec.layers.front().kind == LayerKind::Conv2x2;
  int h = 0, w = 0, c = 0, flat = 0;
  if (conv_phase) {
    if (spec.input_shape.size() != 3)
      throw ConfigError("conv network requires [h,w,c] input, layer 0");
    h = spec.input_shape[0];
    w = spec.input_shape[1];
    c = spec.input_shape[2];
  } else {
    if (spec.input_shape.size() != 1)
      throw ConfigError("dense network requires [d] input, layer 0");
    flat = spec.input_shape[0];
  }

  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& ls = spec.layers[li];
    if (ls.size <= 0)
      throw ConfigError("nonpositive size in layer " + std::to_string(li));
    Layer layer;
    layer.kind = ls.kind;
    layer.act = ls.act;
    double gain = ls.gain;
    if (gain < 0.0) gain = ls.act == Activation::Identity ? 1.0 : std::sqrt(2.0);
    if (ls.kind == LayerKind::Conv2x2) {
      if (!conv_phase)
        throw ConfigError("conv layer " + std::to_string(li) +
                          " after dense layers");
      if (h < 2 || w < 2)
        throw ConfigError("conv layer " + std::to_string(li) +
                          ": input too small");
      layer.in_h = h;
      layer.in_w = w;
      layer.in_c = c;
      Tensor kernel({2, 2, c, ls.size});
      // orthogonalize as a [4*cin, cout] matrix
      Tensor as_mat({4 * c, ls.size});
      orthogonal_init(as_mat, gain, rng);
      kernel.data = std::move(as_mat.data);
      layer.weight = std::move(kernel);
      layer.bias = Tensor({ls.size});
      h -= 1;
      w -= 1;
      c = ls.size;
    } else {
      if (conv_phase && li > 0) {
        flat = h * w * c;
      } else if (conv_phase) {
        throw ConfigError("dense layer 0 with conv input shape");
      }
      conv_phase = false;
      layer.weight = Tensor({flat, ls.size});
      orthogonal_init(layer.weight, gain, rng);
      layer.bias = Tensor({ls.size});
      flat = ls.size;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

double finite_diff_check(std::vector<Tensor*> params,
                         const std::function<double()>& loss_fn,
                         const std::function<void()>& grad_fn, double h) {
  if (h <= 0.0) throw ConfigError("finite_diff_check requires h > 0");
  for (auto* p : params) p->zero_grad();
  grad_fn();
  double worst = 0.0;
  for (auto* p : params) {
    for (long i = 0; i < p->numel(); ++i) {
      const double keep = p->data[i];
      p->data[i] = keep + h;
      const double up = loss_fn();
      p->data[i] = keep - h;
      const double dn = loss_fn();
      p->data[i] = keep;
      const double numeric = (up - dn) / (2.0 * h);
      const double analytic = p->grad.empty() ? 0.0 : p->grad[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace ibrl::nn
