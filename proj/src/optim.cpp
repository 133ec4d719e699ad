#include "ibrl/optim.hpp"

#include <cmath>

namespace ibrl::nn {

Adam::Adam(std::vector<Tensor*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto* p : params_) {
    m_.emplace_back(p->data.size(), 0.0);
    v_.emplace_back(p->data.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor* p = params_[pi];
    if (p->grad.size() != p->data.size()) p->ensure_grad();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < p->data.size(); ++i) {
      const double g = p->grad[i];
      if (!std::isfinite(g))
        throw NumericError("Adam: non-finite gradient at parameter " +
                           std::to_string(pi) + "[" + std::to_string(i) + "]");
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->zero_grad();
    check_finite(*p, "parameters after Adam step");
  }
}

void Adam::restore(long t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw NumericError("Adam restore: moment count mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto* p : params)
      for (auto& g : p->grad) g *= s;
  }
  return norm;
}

}  // namespace ibrl::nn
