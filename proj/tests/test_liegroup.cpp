#include <doctest.h>

#include <cmath>
#include <set>

#include "ivw/liegroup.hpp"
#include "ivw/rng.hpp"
#include "helpers.hpp"

using ivw::AffineTransform;
using ivw::InvarianceParams;
using ivw::Vec6;
using test_helpers::generator_sum;
using test_helpers::taylor_exp;

namespace {

Vec6 random_eta(ivw::Rng& rng, double scale = 1.0) {
  Vec6 eta;
  for (int i = 0; i < 6; ++i) eta[i] = rng.uniform(-scale, scale);
  return eta;
}

Vec6 random_eps(ivw::Rng& rng) {
  Vec6 eps;
  for (int i = 0; i < 6; ++i) eps[i] = rng.uniform(-1.0, 1.0);
  return eps;
}

}  // namespace

TEST_CASE("generator basis shape and content") {
  const auto& gens = ivw::affine_generators();
  REQUIRE(gens.size() == 6);
  for (const auto& g : gens) {
    CHECK(g.row(2).isZero(0.0));  // bottom rows exactly zero
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double v = g(r, c);
        CHECK((v == -1.0 || v == 0.0 || v == 1.0));
      }
    }
  }
  // translation-x moves x, rotation is antisymmetric in the top-left block
  CHECK(gens[0](0, 2) == 1.0);
  CHECK(gens[1](1, 2) == 1.0);
  CHECK(gens[2](0, 1) == -gens[2](1, 0));
  CHECK(gens[3](0, 0) == 1.0);
  CHECK(gens[4](1, 1) == 1.0);
}

TEST_CASE("exp of zero is the identity, exactly") {
  const AffineTransform t = ivw::exp_affine(Vec6::Zero(), Vec6::Ones());
  CHECK(t.matrix == Eigen::Matrix3d::Identity());
}

TEST_CASE("rotation closed form") {
  Vec6 eta = Vec6::Zero();
  eta[2] = M_PI / 2;
  Vec6 eps = Vec6::Zero();
  eps[2] = 1.0;
  const AffineTransform t = ivw::exp_affine(eta, eps);
  Eigen::Matrix3d want;
  want << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((t.matrix - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("translation closed form") {
  Vec6 eta = Vec6::Zero();
  eta[0] = 0.5;
  eta[1] = -0.25;
  Vec6 eps = Vec6::Zero();
  eps[0] = 1.0;
  eps[1] = 1.0;
  const AffineTransform t = ivw::exp_affine(eta, eps);
  Eigen::Matrix3d want;
  want << 1, 0, 0.5, 0, 1, -0.25, 0, 0, 1;
  CHECK((t.matrix - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matches raw Taylor-sum oracle on random draws") {
  ivw::Rng rng = ivw::Rng::stream(42, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec6 eta = random_eta(rng, 1.5);
    const Vec6 eps = random_eps(rng);
    const AffineTransform t = ivw::exp_affine(eta, eps);
    const Eigen::Matrix3d oracle = taylor_exp(generator_sum(eta, eps));
    CHECK(test_helpers::max_rel_err(t.matrix, oracle) < 1e-10);
    CHECK(std::abs(t.matrix(2, 0)) < 1e-12);
    CHECK(std::abs(t.matrix(2, 1)) < 1e-12);
    CHECK(std::abs(t.matrix(2, 2) - 1.0) < 1e-12);
  }
}

TEST_CASE("rotation-only transforms are orthogonal with determinant 1") {
  ivw::Rng rng = ivw::Rng::stream(7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec6 eta = Vec6::Zero();
    eta[2] = rng.uniform(-M_PI, M_PI);
    Vec6 eps = Vec6::Zero();
    eps[2] = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix2d r = ivw::exp_affine(eta, eps).matrix.topLeftCorner<2, 2>();
    CHECK((r * r.transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("one-parameter subgroup flow property") {
  ivw::Rng rng = ivw::Rng::stream(8, 0);
  Vec6 eta = Vec6::Zero();
  eta[2] = 1.3;
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    Vec6 ea = Vec6::Zero(), eb = Vec6::Zero(), eab = Vec6::Zero();
    ea[2] = a;
    eb[2] = b;
    eab[2] = a + b;  // |a+b| may exceed 1; exp does not care
    const Eigen::Matrix3d lhs = ivw::exp_affine(eta, eab).matrix;
    const Eigen::Matrix3d rhs =
        ivw::exp_affine(eta, ea).matrix * ivw::exp_affine(eta, eb).matrix;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("non-finite input is rejected") {
  Vec6 eta = Vec6::Zero();
  eta[0] = std::nan("");
  CHECK_THROWS_AS(ivw::exp_affine(eta, Vec6::Ones()), std::invalid_argument);
}

TEST_CASE("gradient at eta = 0 equals eps_i G_i") {
  Vec6 eps;
  eps << 0.3, -0.7, 0.9, 0.1, -0.2, 0.5;
  const ivw::ExpAffineGrad g = ivw::exp_affine_grad(Vec6::Zero(), eps);
  const auto& gens = ivw::affine_generators();
  for (int i = 0; i < 6; ++i) {
    const Eigen::Matrix3d want = eps[i] * gens[static_cast<std::size_t>(i)];
    CHECK((g.d_eta[static_cast<std::size_t>(i)] - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rotation-only gradient closed form") {
  Vec6 eta = Vec6::Zero();
  eta[2] = 0.8;
  Vec6 eps = Vec6::Zero();
  eps[2] = 0.6;
  const double angle = eps[2] * eta[2];
  const ivw::ExpAffineGrad g = ivw::exp_affine_grad(eta, eps);
  Eigen::Matrix3d want;
  want << -std::sin(angle), -std::cos(angle), 0, std::cos(angle), -std::sin(angle), 0,
      0, 0, 0;
  want *= eps[2];
  CHECK((g.d_eta[2] - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gradient matches central finite differences") {
  ivw::Rng rng = ivw::Rng::stream(9, 0);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec6 eta = random_eta(rng);
    const Vec6 eps = random_eps(rng);
    const ivw::ExpAffineGrad g = ivw::exp_affine_grad(eta, eps);
    CHECK(test_helpers::max_rel_err(g.transform.matrix,
                                    ivw::exp_affine(eta, eps).matrix) < 1e-12);
    for (int i = 0; i < 6; ++i) {
      Vec6 plus = eta, minus = eta;
      plus[i] += h;
      minus[i] -= h;
      const Eigen::Matrix3d fd =
          (ivw::exp_affine(plus, eps).matrix - ivw::exp_affine(minus, eps).matrix) /
          (2.0 * h);
      CHECK(test_helpers::max_rel_err(g.d_eta[static_cast<std::size_t>(i)], fd) < 1e-5);
    }
  }
}

TEST_CASE("stochastic sampling: eta = 0 gives identities") {
  InvarianceParams params;  // eta zero
  const auto transforms = ivw::sample_stochastic(params, 5, 11);
  REQUIRE(transforms.size() == 5);
  for (const auto& t : transforms) {
    CHECK(t.matrix == Eigen::Matrix3d::Identity());
  }
}

TEST_CASE("stochastic sampling: same seed is bitwise identical") {
  InvarianceParams params;
  params.eta[2] = 1.0;
  params.trainable[2] = true;
  const auto a = ivw::sample_stochastic(params, 16, 99);
  const auto b = ivw::sample_stochastic(params, 16, 99);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].epsilon == b[i].epsilon);
    CHECK(a[i].matrix == b[i].matrix);
  }
}

TEST_CASE("stochastic epsilon distribution: mean near 0, range respected") {
  InvarianceParams params;
  params.eta[2] = 0.5;
  const int n = 1'000'000 / 6;  // all six coordinates drawn per transform
  const auto transforms = ivw::sample_stochastic(params, n, 123);
  Vec6 mean = Vec6::Zero();
  for (const auto& t : transforms) {
    for (int i = 0; i < 6; ++i) {
      CHECK(t.epsilon[i] >= -1.0);
      CHECK(t.epsilon[i] <= 1.0);
    }
    mean += t.epsilon;
  }
  mean /= static_cast<double>(n);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(mean[i]) < 0.01);
}

TEST_CASE("masked coordinates still consume draws") {
  InvarianceParams a;
  a.eta[2] = 1.0;
  a.trainable = {{false, false, true, false, false, false}};
  InvarianceParams b = a;
  b.trainable = {{true, true, true, true, true, true}};
  b.eta = a.eta;
  const auto ta = ivw::sample_stochastic(a, 8, 5);
  const auto tb = ivw::sample_stochastic(b, 8, 5);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].epsilon == tb[i].epsilon);
  }
}

TEST_CASE("deterministic grid: inclusive endpoints for one axis") {
  InvarianceParams params;
  params.eta[2] = 1.0;
  params.trainable[2] = true;
  const auto t = ivw::sample_deterministic(params, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0].epsilon[2] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(t[1].epsilon[2] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(t[2].epsilon[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("deterministic grid: 3x3 Cartesian product for two axes") {
  InvarianceParams params;
  params.eta[0] = 0.2;
  params.eta[1] = 0.3;
  params.trainable[0] = params.trainable[1] = true;
  const auto t = ivw::sample_deterministic(params, 9);
  REQUIRE(t.size() == 9);
  std::set<std::pair<double, double>> points;
  for (const auto& tr : t) points.insert({tr.epsilon[0], tr.epsilon[1]});
  CHECK(points.size() == 9);
  for (const auto& [x, y] : points) {
    CHECK((std::abs(x) < 1e-14 || std::abs(std::abs(x) - 1.0) < 1e-14));
    CHECK((std::abs(y) < 1e-14 || std::abs(std::abs(y) - 1.0) < 1e-14));
  }
}

TEST_CASE("deterministic grid: full-circle rotation uses exclusive spacing") {
  InvarianceParams params;
  params.eta[2] = M_PI;
  params.trainable[2] = true;
  const auto t = ivw::sample_deterministic(params, 4);
  REQUIRE(t.size() == 4);
  std::multiset<double> angles;
  for (const auto& tr : t) angles.insert(tr.epsilon[2] * M_PI);
  const double want[] = {-M_PI, -M_PI / 2, 0.0, M_PI / 2};
  auto it = angles.begin();
  for (double w : want) {
    CHECK(*it == doctest::Approx(w).epsilon(1e-12));
    ++it;
  }
}

TEST_CASE("deterministic grid: invalid count names valid values") {
  InvarianceParams params;
  params.trainable[0] = params.trainable[1] = true;
  CHECK_THROWS_AS(ivw::sample_deterministic(params, 8), std::invalid_argument);
  try {
    ivw::sample_deterministic(params, 8);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("9") != std::string::npos);  // nearest valid square
  }
}

TEST_CASE("deterministic grid: m = 1 puts the single point at zero") {
  InvarianceParams params;
  params.eta[2] = 1.0;
  params.trainable[2] = true;
  const auto t = ivw::sample_deterministic(params, 1);
  REQUIRE(t.size() == 1);
  CHECK(t[0].epsilon[2] == 0.0);
  CHECK(t[0].matrix == Eigen::Matrix3d::Identity());
}
