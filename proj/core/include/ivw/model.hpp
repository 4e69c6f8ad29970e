#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ivw/liegroup.hpp"

namespace ivw {

enum class Flavor { RFF, ReLU };

// Architecture descriptor for the shallow invariant network.
struct ModelSpec {
  Flavor flavor = Flavor::RFF;
  int hidden = 1024;
  bool image_mode = true;
  int height = 28, width = 28;  // image mode
  int coord_dim = 2;            // coordinate mode
  int classes = 10;
  double rff_lengthscale = 0.3;
  double blur_sigma = 0.1;

  int input_dim() const { return image_mode ? height * width : coord_dim; }
  void validate() const;
};

// First-layer weights. In image mode W1 columns are pixels in row-major
// order (p = r*W + c), matching the flattening of dataset images.
struct FirstLayer {
  Eigen::MatrixXd W1;      // hidden x D
  Eigen::VectorXd phase;   // hidden (RFF only; empty for ReLU)
  bool trainable = false;  // frozen for RFF, learned for ReLU
};

// RFF mode: W1 entries ~ N(0, lengthscale^-2), phase ~ U[0, 2pi); the
// feature scale sqrt(2/hidden) is folded into the activation so that
// z(x)^T z(y) approximates the RBF kernel exp(-|x-y|^2 / (2 lengthscale^2)).
// ReLU mode: Xavier-uniform entries, no phase.
FirstLayer init_first_layer(const ModelSpec& spec, std::uint64_t seed);

// phi(W1_eff x + phase), batched over columns of x.
Eigen::MatrixXd activate(const ModelSpec& spec, const Eigen::MatrixXd& preact);

// Class probabilities for a batch (columns of x), averaged over the given
// transforms. average_logits switches the orbit average from probabilities
// (default) to pre-soft-argmax logits.
Eigen::MatrixXd batch_probs(const ModelSpec& spec, const FirstLayer& first,
                            const Eigen::MatrixXd& W2, const Eigen::MatrixXd& x,
                            const std::vector<AffineTransform>& transforms,
                            bool average_logits = false);

// Single-sample network output g(T(x)).
Eigen::VectorXd g_forward(const ModelSpec& spec, const FirstLayer& first,
                          const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                          const AffineTransform& transform);

// Orbit-averaged prediction (1/S) sum_i g(T_i(x)).
Eigen::VectorXd f_invariant(const ModelSpec& spec, const FirstLayer& first,
                            const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                            const std::vector<AffineTransform>& transforms,
                            bool average_logits = false);

struct Prediction {
  int label = 0;
  Eigen::VectorXd probs;
};

// argmax of f_invariant; ties broken toward the lowest class index.
Prediction predict(const ModelSpec& spec, const FirstLayer& first,
                   const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                   const std::vector<AffineTransform>& transforms);

}  // namespace ivw
