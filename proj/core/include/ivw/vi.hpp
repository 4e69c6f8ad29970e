#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ivw/liegroup.hpp"
#include "ivw/model.hpp"
#include "ivw/rng.hpp"

namespace ivw {

// Block-diagonal Gaussian posterior over the output weights: one full
// covariance block per class, Sigma_c = L_c^T L_c with the Cholesky factor
// stored as free strictly-lower entries plus a log-diagonal.
struct VariationalPosterior {
  int classes = 0;
  int dim = 0;                                // hidden units per class
  std::vector<Eigen::VectorXd> mu;            // per class, dim
  std::vector<Eigen::MatrixXd> lower_strict;  // per class, dim x dim, strict lower
  std::vector<Eigen::VectorXd> log_diag;      // per class, dim
  double prior_variance = 1.0;                // alpha, Sigma_p = alpha * I

  static VariationalPosterior init(int classes, int dim, double alpha);

  // L_c with exponentiated diagonal
  Eigen::MatrixXd cholesky(int c) const;
  Eigen::MatrixXd covariance(int c) const;  // L_c^T L_c
  // rows are the posterior means mu_c
  Eigen::MatrixXd mean_weights() const;
  void validate() const;
};

// One reparameterized draw W2 (classes x dim): row c = mu_c + L_c^T zeta_c.
// When zeta_out is non-null the noise is stored for gradient chaining.
Eigen::MatrixXd sample_theta(const VariationalPosterior& q, Rng& rng,
                             std::vector<Eigen::VectorXd>* zeta_out = nullptr);

// Convenience: L independent draws from a seeded stream.
std::vector<Eigen::MatrixXd> sample_theta(const VariationalPosterior& q,
                                          std::uint64_t seed, int count);

// Closed-form KL( q || N(0, alpha I) ), summed over class blocks:
// 0.5 * [ |mu|^2/alpha + tr(Sigma)/alpha - D + D log alpha - log|Sigma| ].
double kl_to_prior(const VariationalPosterior& q);

// Gradients of kl_to_prior in the stored parameterization.
struct KlGrad {
  std::vector<Eigen::VectorXd> d_mu;
  std::vector<Eigen::MatrixXd> d_lower_strict;
  std::vector<Eigen::VectorXd> d_log_diag;
};
KlGrad kl_to_prior_grad(const VariationalPosterior& q);

}  // namespace ivw
