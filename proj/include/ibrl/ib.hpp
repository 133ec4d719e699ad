#pragma once

#include <vector>

#include "ibrl/errors.hpp"

namespace ibrl::ib {

// Diagonal-Gaussian posterior over the code for one observation.
struct GaussianCode {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> z;  // empty until sampled
};

struct MIEstimate {
  double mean_kl = 0.0;
  std::vector<double> per_sample_kl;
};

// KL( N(mu, diag sigma^2) || N(0,I) ) = 1/2 sum(mu^2 + sigma^2 - 1 - ln sigma^2)
double kl_to_unit_gaussian(const std::vector<double>& mu,
                           const std::vector<double>& sigma);
double kl_to_unit_gaussian(const GaussianCode& code);

// Sample mean of per-code KLs; the variational upper bound on I(Z,S)
// when the batch is drawn from p(S).
MIEstimate mi_upper_bound(const std::vector<GaussianCode>& codes);

// Quadrature oracle: exact MI of a discrete-state channel with 1-D
// Gaussian codes, integrated on a uniform z grid. Refuses grids too
// coarse to be trusted (halving the step moves the result > 1e-6).
double true_mi_discrete(const std::vector<double>& state_probs,
                        const std::vector<double>& mus,
                        const std::vector<double>& sigmas, double z_lo,
                        double z_hi, int n_points);

// r' = r - beta * kl
double modified_reward(double r, double kl, double beta);

// total = policy + value_coef*value - entropy_coef*entropy + beta*mean_kl
double ib_loss(double policy_loss, double value_loss, double entropy,
               double mean_kl, double value_coef, double entropy_coef,
               double beta);

}  // namespace ibrl::ib
