#include "ivw/liegroup.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ivw/rng.hpp"

namespace ivw {

const std::array<Eigen::Matrix3d, 6>& affine_generators() {
  static const std::array<Eigen::Matrix3d, 6> basis = [] {
    std::array<Eigen::Matrix3d, 6> g;
    for (auto& m : g) m.setZero();
    g[0](0, 2) = 1.0;                      // translation x
    g[1](1, 2) = 1.0;                      // translation y
    g[2](0, 1) = -1.0; g[2](1, 0) = 1.0;   // rotation
    g[3](0, 0) = 1.0;                      // scale x
    g[4](1, 1) = 1.0;                      // scale y
    g[5](0, 1) = 1.0; g[5](1, 0) = 1.0;    // shear
    return g;
  }();
  return basis;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 >= 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5))) + 1;
  }
  Eigen::MatrixXd a = m / std::pow(2.0, squarings);

  // truncated Taylor series sum_{k<=12} a^k / k!
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 12; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  return result;
}

namespace {

Eigen::Matrix3d weighted_generator_sum(const Vec6& eta, const Vec6& epsilon) {
  if (!eta.allFinite() || !epsilon.allFinite()) {
    throw std::invalid_argument("exp_affine: non-finite eta or epsilon");
  }
  const auto& g = affine_generators();
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 6; ++i) m += epsilon[i] * eta[i] * g[i];
  return m;
}

}  // namespace

AffineTransform exp_affine(const Vec6& eta, const Vec6& epsilon) {
  AffineTransform t;
  t.epsilon = epsilon;
  t.matrix = expm(weighted_generator_sum(eta, epsilon));
  return t;
}

ExpAffineGrad exp_affine_grad(const Vec6& eta, const Vec6& epsilon) {
  ExpAffineGrad out;
  const Eigen::Matrix3d a = weighted_generator_sum(eta, epsilon);
  out.transform.epsilon = epsilon;
  out.transform.matrix = expm(a);
  const auto& g = affine_generators();
  for (int i = 0; i < 6; ++i) {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(6, 6);
    aug.topLeftCorner<3, 3>() = a;
    aug.bottomRightCorner<3, 3>() = a;
    aug.topRightCorner<3, 3>() = epsilon[i] * g[i];
    out.d_eta[i] = expm(aug).topRightCorner<3, 3>();
  }
  return out;
}

std::vector<AffineTransform> sample_stochastic(const InvarianceParams& params,
                                               int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_stochastic: count must be >= 1");
  Rng rng = Rng::stream(seed, 0);
  std::vector<AffineTransform> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Vec6 eps;
    for (int i = 0; i < 6; ++i) eps[i] = rng.uniform(-1.0, 1.0);
    out.push_back(exp_affine(params.eta, eps));
  }
  return out;
}

std::vector<AffineTransform> sample_deterministic(const InvarianceParams& params,
                                                  int count) {
  if (count < 1) throw std::invalid_argument("sample_deterministic: count must be >= 1");
  const int k = params.active_count();

  std::vector<int> active;
  for (int i = 0; i < 6; ++i) {
    if (params.trainable[static_cast<std::size_t>(i)]) active.push_back(i);
  }

  int m = 1;
  if (k == 0) {
    if (count != 1) {
      throw std::invalid_argument(
          "sample_deterministic: no trainable coordinates, count must be 1");
    }
  } else {
    m = static_cast<int>(std::llround(std::pow(static_cast<double>(count), 1.0 / k)));
    // llround of the k-th root can land one off for exact powers
    auto ipow = [](long long base, int e) {
      long long r = 1;
      for (int i = 0; i < e; ++i) r *= base;
      return r;
    };
    bool ok = false;
    for (int cand = std::max(1, m - 1); cand <= m + 1; ++cand) {
      if (ipow(cand, k) == count) { m = cand; ok = true; break; }
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "sample_deterministic: count " << count << " is not an integer "
          << k << "-th power; valid counts are";
      for (int c = 1; c <= 6; ++c) msg << " " << ipow(c, k);
      msg << " ...";
      throw std::invalid_argument(msg.str());
    }
  }

  const bool full_circle_rotation =
      k == 1 && active[0] == 2 && std::abs(params.eta[2] - M_PI) <= 1e-6;

  auto axis_point = [&](int j) {
    if (full_circle_rotation) return -1.0 + 2.0 * j / m;          // endpoint-exclusive
    if (m == 1) return 0.0;
    return -1.0 + 2.0 * j / (m - 1);                              // endpoint-inclusive
  };

  std::vector<AffineTransform> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    Vec6 eps = Vec6::Zero();
    int rem = idx;
    for (int a = 0; a < k; ++a) {
      eps[active[static_cast<std::size_t>(a)]] = axis_point(rem % m);
      rem /= m;
    }
    out.push_back(exp_affine(params.eta, eps));
  }
  return out;
}

}  // namespace ivw
