#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace ivw {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mask6 = std::array<bool, 6>;

// The six affine generators: translation-x, translation-y, rotation,
// scale-x, scale-y, shear. Entries are in {-1, 0, 1} and every bottom row
// is zero, so exp() of any combination keeps the homogeneous row (0,0,1).
const std::array<Eigen::Matrix3d, 6>& affine_generators();

// Learnable transformation-distribution parameters. Masked-off entries are
// held at exactly zero by the optimizer.
struct InvarianceParams {
  Vec6 eta = Vec6::Zero();
  Mask6 trainable{{false, false, false, false, false, false}};

  int active_count() const {
    int n = 0;
    for (bool b : trainable) n += b ? 1 : 0;
    return n;
  }
};

// One sampled transformation together with the noise that produced it.
struct AffineTransform {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  Vec6 epsilon = Vec6::Zero();
};

// General matrix exponential by scaling-and-squaring with a truncated
// Taylor series. Used for both the 3x3 transforms and the 6x6 augmented
// blocks in the derivative computation.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

// exp(sum_i eps_i * eta_i * G_i). Throws std::invalid_argument on
// non-finite input.
AffineTransform exp_affine(const Vec6& eta, const Vec6& epsilon);

struct ExpAffineGrad {
  AffineTransform transform;
  std::array<Eigen::Matrix3d, 6> d_eta;  // dT/d eta_i
};

// Transform plus exact Jacobians via the block-augmentation identity
// exp([[A, dA],[0, A]]) = [[exp A, d(exp A)],[0, exp A]].
ExpAffineGrad exp_affine_grad(const Vec6& eta, const Vec6& epsilon);

// count i.i.d. draws of epsilon ~ U[-1,1]^6 from the seeded stream. All six
// coordinates are always consumed, so toggling the trainable mask does not
// shift the draws of the other coordinates.
std::vector<AffineTransform> sample_stochastic(const InvarianceParams& params,
                                               int count, std::uint64_t seed);

// Cartesian grid of m points per trainable axis; count must equal
// m^k_active. Endpoint-inclusive linspace on [-1,1], except for a single
// active rotation axis with eta_3 within 1e-6 of pi, where the spacing
// -1 + 2j/m keeps the sampled angle set closed under rotation by 2*pi/m.
std::vector<AffineTransform> sample_deterministic(const InvarianceParams& params,
                                                  int count);

}  // namespace ivw
