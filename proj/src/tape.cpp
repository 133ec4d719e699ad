#include "ibrl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ibrl/kernels.hpp"

namespace ibrl::nn {

namespace k = kernels;

Var Tape::push(Tensor value, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

std::vector<double>& Tape::adj(int id) { return nodes_[id].adj; }

Var Tape::param(Tensor* p) {
  auto it = param_ids_.find(p);
  if (it != param_ids_.end()) return Var{it->second};
  Node n;
  n.value = *p;  // copy of current values; updates require a fresh tape
  n.leaf = p;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_[p] = id;
  return Var{id};
}

Var Tape::constant(Tensor value) { return push(std::move(value), {}); }

Var Tape::dense(Var x, Var w, Var b) {
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  const Tensor& bv = nodes_[b.id].value;
  if (xv.shape.size() != 2 || wv.shape.size() != 2 || xv.shape[1] != wv.shape[0])
    throw NumericError("dense: shape mismatch, input " + xv.shape_str() +
                       " vs weight " + wv.shape_str());
  const int n = xv.shape[0], kk = xv.shape[1], m = wv.shape[1];
  Tensor out({n, m});
  for (int i = 0; i < n; ++i)
    std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + i * m);
  k::gemm_nn(xv.data.data(), wv.data.data(), out.data.data(), n, kk, m);
  int xi = x.id, wi = w.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, wi, bi, oi, n, kk, m](Tape& t) {
    const auto& go = t.adj(oi);
    // dX += dY W^T, dW += X^T dY, db += column sums of dY
    k::gemm_nt(go.data(), t.nodes_[wi].value.data.data(), t.adj(xi).data(), n,
               m, kk);
    k::gemm_tn(t.nodes_[xi].value.data.data(), go.data(), t.adj(wi).data(), n,
               kk, m);
    auto& gb = t.adj(bi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) gb[j] += go[static_cast<long>(i) * m + j];
  };
  return o;
}

Var Tape::conv2x2(Var x, Var w, Var b) {
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  const Tensor& bv = nodes_[b.id].value;
  if (xv.shape.size() != 4)
    throw NumericError("conv2x2 expects [n,h,w,c] input, got " +
                       xv.shape_str());
  const int n = xv.shape[0], h = xv.shape[1], ww = xv.shape[2],
            cin = xv.shape[3];
  if (wv.shape != std::vector<int>{2, 2, cin, wv.shape[3]})
    throw NumericError("conv2x2: weight shape " + wv.shape_str() +
                       " does not match input channels");
  const int cout = wv.shape[3];
  Tensor out({n, h - 1, ww - 1, cout});
  k::conv2x2_forward(xv.data.data(), wv.data.data(), bv.data.data(),
                     out.data.data(), n, h, ww, cin, cout);
  int xi = x.id, wi = w.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, wi, bi, oi, n, h, ww, cin, cout](Tape& t) {
    const auto& go = t.adj(oi);
    k::conv2x2_backward(t.nodes_[xi].value.data.data(),
                        t.nodes_[wi].value.data.data(), go.data(),
                        t.adj(xi).data(), t.adj(wi).data(), t.adj(bi).data(),
                        n, h, ww, cin, cout);
  };
  return o;
}

Var Tape::flatten_rows(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  if (xv.shape.empty()) throw NumericError("flatten_rows on scalar");
  const int n = xv.shape[0];
  const int d = static_cast<int>(xv.numel() / n);
  Tensor out({n, d}, xv.data);
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  };
  return o;
}

Var Tape::tanh_(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i) out.data[i] = std::tanh(xv.data[i]);
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& y = t.nodes_[oi].value.data;
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (1.0 - y[i] * y[i]);
  };
  return o;
}

Var Tape::relu(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i) out.data[i] = std::max(0.0, xv.data[i]);
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& xd = t.nodes_[xi].value.data;
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i)
      if (xd[i] > 0.0) gx[i] += go[i];
  };
  return o;
}

Var Tape::exp_(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i) out.data[i] = std::exp(xv.data[i]);
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& y = t.nodes_[oi].value.data;
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * y[i];
  };
  return o;
}

Var Tape::square(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i)
    out.data[i] = xv.data[i] * xv.data[i];
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& xd = t.nodes_[xi].value.data;
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += 2.0 * go[i] * xd[i];
  };
  return o;
}

Var Tape::clamp(Var x, double lo, double hi) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i)
    out.data[i] = std::clamp(xv.data[i], lo, hi);
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi, lo, hi](Tape& t) {
    const auto& xd = t.nodes_[xi].value.data;
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i)
      if (xd[i] >= lo && xd[i] <= hi) gx[i] += go[i];
  };
  return o;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw NumericError(std::string(op) + ": shape mismatch " + a.shape_str() +
                       " vs " + b.shape_str());
}
}  // namespace

Var Tape::add(Var a, Var b) {
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require_same_shape(av, bv, "add");
  Tensor out(av.shape);
  for (long i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
  int ai = a.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [ai, bi, oi](Tape& t) {
    const auto& go = t.adj(oi);
    auto& ga = t.adj(ai);
    auto& gb = t.adj(bi);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  };
  return o;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require_same_shape(av, bv, "sub");
  Tensor out(av.shape);
  for (long i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] - bv.data[i];
  int ai = a.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [ai, bi, oi](Tape& t) {
    const auto& go = t.adj(oi);
    auto& ga = t.adj(ai);
    auto& gb = t.adj(bi);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  };
  return o;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape);
  for (long i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] * bv.data[i];
  int ai = a.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [ai, bi, oi](Tape& t) {
    const auto& ad = t.nodes_[ai].value.data;
    const auto& bd = t.nodes_[bi].value.data;
    const auto& go = t.adj(oi);
    auto& ga = t.adj(ai);
    auto& gb = t.adj(bi);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * bd[i];
      gb[i] += go[i] * ad[i];
    }
  };
  return o;
}

Var Tape::min_(Var a, Var b) {
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require_same_shape(av, bv, "min");
  Tensor out(av.shape);
  for (long i = 0; i < av.numel(); ++i)
    out.data[i] = std::min(av.data[i], bv.data[i]);
  int ai = a.id, bi = b.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [ai, bi, oi](Tape& t) {
    const auto& ad = t.nodes_[ai].value.data;
    const auto& bd = t.nodes_[bi].value.data;
    const auto& go = t.adj(oi);
    auto& ga = t.adj(ai);
    auto& gb = t.adj(bi);
    for (size_t i = 0; i < go.size(); ++i) {
      if (ad[i] <= bd[i])
        ga[i] += go[i];
      else
        gb[i] += go[i];
    }
  };
  return o;
}

Var Tape::scale(Var x, double c) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i) out.data[i] = xv.data[i] * c;
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi, c](Tape& t) {
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * c;
  };
  return o;
}

Var Tape::add_scalar(Var x, double c) {
  const Tensor& xv = nodes_[x.id].value;
  Tensor out(xv.shape);
  for (long i = 0; i < xv.numel(); ++i) out.data[i] = xv.data[i] + c;
  int xi = x.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  };
  return o;
}

Var Tape::add_rowvec(Var x, Var v) {
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& vv = nodes_[v.id].value;
  if (xv.shape.size() != 2 || vv.numel() != xv.shape[1])
    throw NumericError("add_rowvec: shape mismatch");
  const int n = xv.shape[0], m = xv.shape[1];
  Tensor out(xv.shape);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out.data[i * m + j] = xv.data[i * m + j] + vv.data[j];
  int xi = x.id, vi = v.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [xi, vi, oi, n, m](Tape& t) {
    const auto& go = t.adj(oi);
    auto& gx = t.adj(xi);
    auto& gv = t.adj(vi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        gx[i * m + j] += go[i * m + j];
        gv[j] += go[i * m + j];
      }
  };
  return o;
}

Var Tape::sum(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  double s = 0.0;
  for (double v : xv.data) s += v;
  int xi = x.id;
  Var o = push(Tensor({1}, {s}), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi](Tape& t) {
    const double g = t.adj(oi)[0];
    auto& gx = t.adj(xi);
    for (auto& v : gx) v += g;
  };
  return o;
}

Var Tape::mean(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  const double inv = 1.0 / static_cast<double>(xv.numel());
  double s = 0.0;
  for (double v : xv.data) s += v;
  int xi = x.id;
  Var o = push(Tensor({1}, {s * inv}), {});
  int oi = o.id;
  nodes_[oi].back = [xi, oi, inv](Tape& t) {
    const double g = t.adj(oi)[0] * inv;
    auto& gx = t.adj(xi);
    for (auto& v : gx) v += g;
  };
  return o;
}

Var Tape::categorical_logprob(Var logits, const std::vector<int>& actions) {
  const Tensor& lv = nodes_[logits.id].value;
  if (lv.shape.size() != 2 || static_cast<size_t>(lv.shape[0]) != actions.size())
    throw NumericError("categorical_logprob: batch/action mismatch");
  const int n = lv.shape[0], a = lv.shape[1];
  Tensor out({n});
  // softmax cached for the backward pass
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n) * a);
  for (int i = 0; i < n; ++i) {
    const double* row = lv.data.data() + static_cast<long>(i) * a;
    double mx = row[0];
    for (int j = 1; j < a; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < a; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    out.data[i] = row[actions[i]] - lse;
    for (int j = 0; j < a; ++j)
      (*probs)[static_cast<long>(i) * a + j] = std::exp(row[j] - lse);
  }
  int li = logits.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [li, oi, n, a, probs, actions](Tape& t) {
    const auto& go = t.adj(oi);
    auto& gl = t.adj(li);
    for (int i = 0; i < n; ++i) {
      const double g = go[i];
      for (int j = 0; j < a; ++j)
        gl[i * a + j] -= g * (*probs)[static_cast<long>(i) * a + j];
      gl[i * a + actions[i]] += g;
    }
  };
  return o;
}

Var Tape::categorical_entropy(Var logits) {
  const Tensor& lv = nodes_[logits.id].value;
  if (lv.shape.size() != 2)
    throw NumericError("categorical_entropy expects [n,A] logits");
  const int n = lv.shape[0], a = lv.shape[1];
  Tensor out({n});
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n) * a);
  auto logp = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n) * a);
  for (int i = 0; i < n; ++i) {
    const double* row = lv.data.data() + static_cast<long>(i) * a;
    double mx = row[0];
    for (int j = 1; j < a; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < a; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    double h = 0.0;
    for (int j = 0; j < a; ++j) {
      const double lp = row[j] - lse;
      const double p = std::exp(lp);
      (*probs)[static_cast<long>(i) * a + j] = p;
      (*logp)[static_cast<long>(i) * a + j] = lp;
      h -= p * lp;
    }
    out.data[i] = h;
  }
  int li = logits.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [li, oi, n, a, probs, logp](Tape& t) {
    const auto& h = t.nodes_[oi].value.data;
    const auto& go = t.adj(oi);
    auto& gl = t.adj(li);
    for (int i = 0; i < n; ++i) {
      const double g = go[i];
      for (int j = 0; j < a; ++j) {
        const long ij = static_cast<long>(i) * a + j;
        gl[ij] += -g * (*probs)[ij] * ((*logp)[ij] + h[i]);
      }
    }
  };
  return o;
}

Var Tape::gaussian_kl(Var mu, Var sigma) {
  const Tensor& mv = nodes_[mu.id].value;
  const Tensor& sv = nodes_[sigma.id].value;
  require_same_shape(mv, sv, "gaussian_kl");
  if (mv.shape.size() != 2) throw NumericError("gaussian_kl expects [n,d]");
  const int n = mv.shape[0], d = mv.shape[1];
  Tensor out({n});
  for (int i = 0; i < n; ++i) {
    double kl = 0.0;
    for (int j = 0; j < d; ++j) {
      const double m = mv.data[i * d + j];
      const double s = sv.data[i * d + j];
      if (s <= 0.0) throw NumericError("gaussian_kl: nonpositive sigma");
      kl += 0.5 * (m * m + s * s - 1.0) - std::log(s);
    }
    out.data[i] = kl;
  }
  int mi = mu.id, si = sigma.id;
  Var o = push(std::move(out), {});
  int oi = o.id;
  nodes_[oi].back = [mi, si, oi, n, d](Tape& t) {
    const auto& md = t.nodes_[mi].value.data;
    const auto& sd = t.nodes_[si].value.data;
    const auto& go = t.adj(oi);
    auto& gm = t.adj(mi);
    auto& gs = t.adj(si);
    for (int i = 0; i < n; ++i) {
      const double g = go[i];
      for (int j = 0; j < d; ++j) {
        gm[i * d + j] += g * md[i * d + j];
        gs[i * d + j] += g * (sd[i * d + j] - 1.0 / sd[i * d + j]);
      }
    }
  };
  return o;
}

void Tape::backward(Var loss) {
  if (consumed_)
    throw NumericError("backward called twice on the same recording");
  if (!loss.valid() || nodes_[loss.id].value.numel() != 1)
    throw NumericError("backward requires a scalar loss node");
  consumed_ = true;
  for (auto& n : nodes_) n.adj.assign(n.value.data.size(), 0.0);
  nodes_[loss.id].adj[0] = 1.0;
  for (int i = loss.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);
  for (auto& n : nodes_) {
    if (!n.leaf) continue;
    n.leaf->ensure_grad();
    for (size_t i = 0; i < n.adj.size(); ++i) n.leaf->grad[i] += n.adj[i];
  }
}

}  // namespace ibrl::nn
