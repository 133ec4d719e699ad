#include "ibrl/ib.hpp"

#include <cmath>
#include <string>

namespace ibrl::ib {

double kl_to_unit_gaussian(const std::vector<double>& mu,
                           const std::vector<double>& sigma) {
  if (mu.size() != sigma.size())
    throw NumericError("kl_to_unit_gaussian: mu/sigma length mismatch");
  double kl = 0.0;
  for (size_t i = 0; i < mu.size(); ++i) {
    if (sigma[i] <= 0.0)
      throw NumericError("kl_to_unit_gaussian: nonpositive sigma[" +
                         std::to_string(i) + "]");
    kl += 0.5 * (mu[i] * mu[i] + sigma[i] * sigma[i] - 1.0) -
          std::log(sigma[i]);
  }
  return kl;
}

double kl_to_unit_gaussian(const GaussianCode& code) {
  return kl_to_unit_gaussian(code.mu, code.sigma);
}

MIEstimate mi_upper_bound(const std::vector<GaussianCode>& codes) {
  if (codes.empty()) throw NumericError("mi_upper_bound: empty batch");
  MIEstimate est;
  est.per_sample_kl.reserve(codes.size());
  for (const auto& c : codes) {
    est.per_sample_kl.push_back(kl_to_unit_gaussian(c));
    est.mean_kl += est.per_sample_kl.back();
  }
  est.mean_kl /= static_cast<double>(codes.size());
  return est;
}

namespace {

double gauss_pdf(double z, double mu, double sigma) {
  const double u = (z - mu) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * M_PI));
}

double mi_on_grid(const std::vector<double>& p,
                  const std::vector<double>& mus,
                  const std::vector<double>& sigmas, double z_lo, double z_hi,
                  int n) {
  const double dz = (z_hi - z_lo) / (n - 1);
  double mi = 0.0;
  for (int g = 0; g < n; ++g) {
    const double z = z_lo + g * dz;
    const double wt = (g == 0 || g == n - 1) ? 0.5 : 1.0;  // trapezoid
    double marginal = 0.0;
    for (size_t i = 0; i < p.size(); ++i)
      marginal += p[i] * gauss_pdf(z, mus[i], sigmas[i]);
    if (marginal <= 0.0) continue;
    for (size_t i = 0; i < p.size(); ++i) {
      const double cond = gauss_pdf(z, mus[i], sigmas[i]);
      if (cond <= 0.0) continue;
      mi += wt * dz * p[i] * cond * std::log(cond / marginal);
    }
  }
  return mi;
}

}  // namespace

double true_mi_discrete(const std::vector<double>& state_probs,
                        const std::vector<double>& mus,
                        const std::vector<double>& sigmas, double z_lo,
                        double z_hi, int n_points) {
  if (state_probs.size() != mus.size() || mus.size() != sigmas.size())
    throw NumericError("true_mi_discrete: array length mismatch");
  double total = 0.0;
  for (double p : state_probs) total += p;
  if (std::abs(total - 1.0) > 1e-9)
    throw NumericError("true_mi_discrete: state probabilities must sum to 1");
  for (size_t i = 0; i < mus.size(); ++i) {
    if (sigmas[i] <= 0.0) throw NumericError("true_mi_discrete: sigma <= 0");
    if (mus[i] - 6.0 * sigmas[i] < z_lo || mus[i] + 6.0 * sigmas[i] > z_hi)
      throw NumericError("true_mi_discrete: grid does not cover +-6 sigma");
  }
  const double coarse =
      mi_on_grid(state_probs, mus, sigmas, z_lo, z_hi, n_points);
  const double fine =
      mi_on_grid(state_probs, mus, sigmas, z_lo, z_hi, 2 * n_points - 1);
  if (std::abs(fine - coarse) > 1e-6)
    throw NumericError("true_mi_discrete: grid too coarse (refinement moved "
                       "result by " +
                       std::to_string(std::abs(fine - coarse)) + ")");
  return fine;
}

double modified_reward(double r, double kl, double beta) {
  if (kl < 0.0) throw NumericError("modified_reward: negative kl");
  return r - beta * kl;
}

double ib_loss(double policy_loss, double value_loss, double entropy,
               double mean_kl, double value_coef, double entropy_coef,
               double beta) {
  const double total = policy_loss + value_coef * value_loss -
                       entropy_coef * entropy + beta * mean_kl;
  if (!std::isfinite(total)) throw NumericError("ib_loss: non-finite total");
  return total;
}

}  // namespace ibrl::ib
