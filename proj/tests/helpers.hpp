#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "ivw/liegroup.hpp"

namespace test_helpers {

// Independent oracle: raw truncated Taylor sum exp(M) = sum_n M^n / n!,
// no scaling-and-squaring, 30 terms.
inline Eigen::Matrix3d taylor_exp(const Eigen::Matrix3d& m, int terms = 30) {
  Eigen::Matrix3d acc = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d power = Eigen::Matrix3d::Identity();
  double factorial = 1.0;
  for (int n = 1; n <= terms; ++n) {
    power = power * m;
    factorial *= n;
    acc += power / factorial;
  }
  return acc;
}

inline Eigen::Matrix3d generator_sum(const ivw::Vec6& eta, const ivw::Vec6& eps) {
  const auto& gens = ivw::affine_generators();
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 6; ++i) m += eps[i] * eta[i] * gens[static_cast<std::size_t>(i)];
  return m;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

// Central finite difference of a scalar function of one coordinate.
template <typename F>
double central_diff(F f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace test_helpers
