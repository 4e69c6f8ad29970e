#include <doctest.h>

#include <cmath>
#include <set>

#include "ivw/liegroup.hpp"
#include "ivw/rng.hpp"
#include "ivw/warp.hpp"
#include "helpers.hpp"

using ivw::AffineTransform;
using ivw::FilterGrid;
using ivw::Vec6;

namespace {

AffineTransform rotation(double angle) {
  Vec6 eta = Vec6::Zero();
  eta[2] = angle;
  Vec6 eps = Vec6::Zero();
  eps[2] = 1.0;
  return ivw::exp_affine(eta, eps);
}

AffineTransform translation(double tx, double ty) {
  AffineTransform t;
  t.matrix(0, 2) = tx;
  t.matrix(1, 2) = ty;
  return t;
}

FilterGrid random_filter(int h, int w, std::uint64_t seed) {
  FilterGrid f;
  f.values.resize(h, w);
  ivw::Rng rng = ivw::Rng::stream(seed, 0);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values(i) = rng.gaussian();
  return f;
}

// Brute-force per-pixel bilinear oracle, written independently of WarpPlan.
double oracle_sample(const Eigen::MatrixXd& img, double qx, double qy) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  // normalized [-1,1] -> continuous pixel coordinates (corner-aligned)
  const double cx = (qx + 1.0) * (w - 1) / 2.0;
  const double cy = (qy + 1.0) * (h - 1) / 2.0;
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int x = x0 + dx;
      const int y = y0 + dy;
      const double wx = dx == 0 ? 1.0 - (cx - x0) : cx - x0;
      const double wy = dy == 0 ? 1.0 - (cy - y0) : cy - y0;
      if (x >= 0 && x < w && y >= 0 && y < h) acc += wx * wy * img(y, x);
    }
  }
  return acc;
}

Eigen::MatrixXd oracle_warp(const Eigen::MatrixXd& img, const Eigen::Matrix3d& t) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  Eigen::MatrixXd out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double px = -1.0 + 2.0 * c / (w - 1);
      const double py = -1.0 + 2.0 * r / (h - 1);
      const double qx = t(0, 0) * px + t(0, 1) * py + t(0, 2);
      const double qy = t(1, 0) * px + t(1, 1) * py + t(1, 2);
      // zero padding: taps outside the grid contribute nothing, so points
      // past the boundary fade to zero instead of cutting off sharply
      out(r, c) = oracle_sample(img, qx, qy);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("identity transform reproduces the input exactly") {
  const FilterGrid f = random_filter(6, 5, 1);
  const FilterGrid out = ivw::grid_sample_bilinear(f, AffineTransform{});
  CHECK((out.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rotation fixes the center pixel of an odd grid") {
  FilterGrid f;
  f.values = Eigen::MatrixXd::Zero(3, 3);
  f.values(1, 1) = 1.0;
  for (double angle : {0.3, 1.1, 2.5}) {
    const FilterGrid out = ivw::grid_sample_bilinear(f, rotation(angle));
    CHECK(out.values(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("90-degree rotation permutes a 4x4 grid exactly") {
  FilterGrid f;
  f.values.resize(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) f.values(r, c) = r * 4 + c + 1;
  }
  // exact quarter-turn matrix: exp() would carry ~1e-16 into sin/cos and
  // push the sample points off the grid points
  AffineTransform quarter;
  quarter.matrix << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const FilterGrid out = ivw::grid_sample_bilinear(f, quarter);
  // independent oracle and the permutation property: every output entry is
  // exactly one input entry (samples land on grid points)
  const Eigen::MatrixXd want = oracle_warp(f.values, quarter.matrix);
  CHECK((out.values - want).cwiseAbs().maxCoeff() < 1e-12);
  std::multiset<double> in_vals, out_vals;
  for (Eigen::Index i = 0; i < 16; ++i) {
    in_vals.insert(f.values(i));
    out_vals.insert(out.values(i));
  }
  for (double v : out_vals) CHECK(in_vals.count(v) == 1);
  CHECK(out_vals.size() == 16);
}

TEST_CASE("one-pixel translation shifts columns and zeroes the vacated one") {
  const int w = 5;
  FilterGrid f = random_filter(4, w, 2);
  // output(p) = input(p + 2/(w-1) * e_x): content shifts one column left
  const FilterGrid out = ivw::grid_sample_bilinear(f, translation(2.0 / (w - 1), 0.0));
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c + 1 < w; ++c) {
      CHECK(out.values(r, c) == doctest::Approx(f.values(r, c + 1)).epsilon(1e-12));
    }
    CHECK(out.values(r, w - 1) == 0.0);
  }
}

TEST_CASE("matches brute-force oracle on random transforms") {
  ivw::Rng rng = ivw::Rng::stream(3, 0);
  const FilterGrid f = random_filter(7, 6, 4);
  for (int trial = 0; trial < 20; ++trial) {
    Vec6 eta;
    for (int i = 0; i < 6; ++i) eta[i] = rng.uniform(-0.6, 0.6);
    const AffineTransform t = ivw::exp_affine(eta, Vec6::Ones());
    const FilterGrid out = ivw::grid_sample_bilinear(f, t);
    CHECK((out.values - oracle_warp(f.values, t.matrix)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("linearity in the filter values") {
  const FilterGrid f = random_filter(5, 5, 5);
  const FilterGrid g = random_filter(5, 5, 6);
  const AffineTransform t = rotation(0.7);
  FilterGrid combo;
  combo.values = 2.5 * f.values - 1.25 * g.values;
  const Eigen::MatrixXd lhs = ivw::grid_sample_bilinear(combo, t).values;
  const Eigen::MatrixXd rhs = 2.5 * ivw::grid_sample_bilinear(f, t).values -
                              1.25 * ivw::grid_sample_bilinear(g, t).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("output magnitude bounded by input magnitude") {
  ivw::Rng rng = ivw::Rng::stream(12, 0);
  const FilterGrid f = random_filter(6, 6, 13);
  for (int trial = 0; trial < 10; ++trial) {
    Vec6 eta;
    for (int i = 0; i < 6; ++i) eta[i] = rng.uniform(-1.0, 1.0);
    const FilterGrid out =
        ivw::grid_sample_bilinear(f, ivw::exp_affine(eta, Vec6::Ones()));
    CHECK(out.values.cwiseAbs().maxCoeff() <=
          f.values.cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST_CASE("gradients: identity transform gives the identity filter map") {
  const FilterGrid f = random_filter(4, 4, 7);
  const ivw::GridSampleGrad g = ivw::grid_sample_grad(f, AffineTransform{});
  Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(1, 16);
  for (int p = 0; p < 16; ++p) {
    probe.setZero();
    probe(0, p) = 1.0;
    Eigen::MatrixXd mapped;
    g.d_filter->apply(probe, mapped);
    CHECK((mapped - probe).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gradients: zero filter has zero matrix jacobian") {
  FilterGrid f;
  f.values = Eigen::MatrixXd::Zero(5, 5);
  const ivw::GridSampleGrad g = ivw::grid_sample_grad(f, rotation(0.4));
  CHECK(g.d_matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients: both jacobians match finite differences") {
  // irrational-ish transform keeps samples away from cell boundaries
  const FilterGrid f = random_filter(5, 5, 8);
  Vec6 eta;
  eta << 0.053, -0.041, 0.37, 0.071, -0.083, 0.062;
  const AffineTransform t = ivw::exp_affine(eta, Vec6::Ones());
  const ivw::GridSampleGrad g = ivw::grid_sample_grad(f, t);
  const double h = 1e-6;

  // d output / d filter via the plan's linear map
  for (int p = 0; p < 25; p += 7) {
    FilterGrid plus = f, minus = f;
    plus.values(p / 5, p % 5) += h;
    minus.values(p / 5, p % 5) -= h;
    const Eigen::MatrixXd fd = (ivw::grid_sample_bilinear(plus, t).values -
                                ivw::grid_sample_bilinear(minus, t).values) /
                               (2 * h);
    // column p of the linear map = effect of pixel p on every output
    for (int q = 0; q < 25; ++q) {
      Eigen::MatrixXd out_probe = Eigen::MatrixXd::Zero(1, 25);
      out_probe(0, q) = 1.0;
      Eigen::MatrixXd back;
      g.d_filter->apply_transpose(out_probe, back);
      CHECK(back(0, p) == doctest::Approx(fd(q / 5, q % 5)).epsilon(1e-4));
    }
  }

  // d output / d matrix entries
  for (int entry : {0, 1, 2, 4, 5}) {
    AffineTransform tp = t, tm = t;
    tp.matrix(entry / 3, entry % 3) += h;
    tm.matrix(entry / 3, entry % 3) -= h;
    const Eigen::MatrixXd fd = (ivw::grid_sample_bilinear(f, tp).values -
                                ivw::grid_sample_bilinear(f, tm).values) /
                               (2 * h);
    for (int p = 0; p < 25; ++p) {
      const double got = g.d_matrix(p, entry);
      const double want = fd(p / 5, p % 5);
      CHECK(std::abs(got - want) < 1e-4 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("blur: sigma 0 is the identity") {
  const FilterGrid f = random_filter(5, 6, 9);
  const FilterGrid out = ivw::gaussian_blur(f, 0.0);
  CHECK((out.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blur: negative sigma throws") {
  const FilterGrid f = random_filter(3, 3, 10);
  CHECK_THROWS_AS(ivw::gaussian_blur(f, -0.1), std::invalid_argument);
}

TEST_CASE("blur: interior of a constant filter stays 1, borders shrink") {
  FilterGrid f;
  f.values = Eigen::MatrixXd::Ones(7, 7);
  const FilterGrid out = ivw::gaussian_blur(f, 1.0);
  const int radius = 3;  // ceil(3 * 1.0)
  for (int r = radius; r < 7 - radius; ++r) {
    for (int c = radius; c < 7 - radius; ++c) {
      CHECK(out.values(r, c) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(out.values(0, 0) < 1.0);
}

TEST_CASE("blur: sigma 0.1 kernel is nearly a delta") {
  // exp(-1/(2*0.01)) ~ 2e-22: the center weight dominates utterly
  FilterGrid f;
  f.values = Eigen::MatrixXd::Zero(5, 5);
  f.values(2, 2) = 1.0;
  const FilterGrid out = ivw::gaussian_blur(f, 0.1);
  CHECK(out.values(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.values(2, 3) < 1e-20);
}

TEST_CASE("blur commutes with filter addition") {
  const FilterGrid f = random_filter(6, 6, 11);
  const FilterGrid g = random_filter(6, 6, 12);
  FilterGrid sum;
  sum.values = f.values + g.values;
  const Eigen::MatrixXd lhs = ivw::gaussian_blur(sum, 0.8).values;
  const Eigen::MatrixXd rhs =
      ivw::gaussian_blur(f, 0.8).values + ivw::gaussian_blur(g, 0.8).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("blur plan transpose symmetry") {
  // kernel symmetry: <B u, v> == <u, B v>
  ivw::BlurPlan plan(6, 6, 0.7);
  ivw::Rng rng = ivw::Rng::stream(20, 0);
  Eigen::MatrixXd u(1, 36), v(1, 36);
  for (int i = 0; i < 36; ++i) {
    u(0, i) = rng.gaussian();
    v(0, i) = rng.gaussian();
  }
  Eigen::MatrixXd bu, bv;
  plan.apply(u, bu);
  plan.apply(v, bv);
  CHECK(bu.row(0).dot(v.row(0)) == doctest::Approx(u.row(0).dot(bv.row(0))).epsilon(1e-12));
}

TEST_CASE("coordinate transform: identity and quarter rotation") {
  Eigen::MatrixXd pts(2, 2);
  pts << 1.0, 0.0, 0.5, -0.5;
  CHECK((ivw::transform_coordinates(pts, AffineTransform{}) - pts)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  Eigen::MatrixXd one(1, 2);
  one << 1.0, 0.0;
  const Eigen::MatrixXd rot = ivw::transform_coordinates(one, rotation(M_PI / 2));
  CHECK(rot(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rot(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coordinate transform associativity") {
  ivw::Rng rng = ivw::Rng::stream(14, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(3, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
    Vec6 eta;
    for (int i = 0; i < 6; ++i) eta[i] = rng.uniform(-0.8, 0.8);
    const AffineTransform t = ivw::exp_affine(eta, Vec6::Ones());
    Eigen::MatrixXd w(4, 2);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
    // W * (T x) == (W T) x, with W acting on the 2-d coordinates
    const Eigen::MatrixXd tx = ivw::transform_coordinates(x, t);
    const Eigen::MatrixXd lhs = w * tx.transpose();
    const Eigen::MatrixXd wt = w * t.matrix.topLeftCorner<2, 3>();
    Eigen::MatrixXd xh(3, 3);
    xh << x, Eigen::VectorXd::Ones(3);
    const Eigen::MatrixXd rhs = wt * xh.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}
