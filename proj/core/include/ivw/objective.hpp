#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ivw/liegroup.hpp"
#include "ivw/model.hpp"
#include "ivw/vi.hpp"

namespace ivw {

struct Batch {
  Eigen::MatrixXd x;        // D x M (columns are examples)
  std::vector<int> labels;  // M
};

struct ObjectiveSettings {
  int sample_count = 32;  // S transforms, shared across the batch
  int theta_samples = 1;  // L posterior draws
  std::uint64_t noise_seed = 0;
  bool deterministic_transforms = false;
  bool average_logits = false;
};

// Gradients of the objective (the quantity being maximized) in the stored
// parameterization. Masked eta coordinates are exactly zero.
struct ObjectiveGrads {
  std::vector<Eigen::VectorXd> d_mu;
  std::vector<Eigen::MatrixXd> d_lower_strict;
  std::vector<Eigen::VectorXd> d_log_diag;
  Eigen::MatrixXd d_w1;  // empty when the first layer is frozen
  Vec6 d_eta = Vec6::Zero();
  Eigen::MatrixXd d_w2;  // point-estimate mode only
};

struct ObjectiveValue {
  double objective = 0.0;  // SGVB ELBO estimate, or mean log-likelihood
  double ce_term = 0.0;    // batch-mean cross-entropy (positive)
  double kl_term = 0.0;
  double batch_accuracy = 0.0;
};

// SGVB mini-batch ELBO estimate (N/M scaling on the likelihood term, minus
// the closed-form KL), with one shared set of S transforms per batch.
// Noise (epsilon and posterior zeta) is a pure function of noise_seed, so a
// fixed seed freezes the estimator for finite-difference checks.
ObjectiveValue sgvb_objective(const ModelSpec& spec, const FirstLayer& first,
                              const VariationalPosterior& q,
                              const InvarianceParams& params, const Batch& batch,
                              int dataset_size, const ObjectiveSettings& settings,
                              ObjectiveGrads* grads = nullptr);

// Maximum-likelihood baseline: batch-mean log-likelihood of the invariant
// predictor under a point estimate of W2, no KL term.
ObjectiveValue point_estimate_objective(const ModelSpec& spec, const FirstLayer& first,
                                        const Eigen::MatrixXd& w2,
                                        const InvarianceParams& params,
                                        const Batch& batch,
                                        const ObjectiveSettings& settings,
                                        ObjectiveGrads* grads = nullptr);

}  // namespace ivw
