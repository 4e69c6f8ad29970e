#include <doctest.h>

#include <cmath>

#include "ivw/objective.hpp"
#include "ivw/rng.hpp"

using ivw::Batch;
using ivw::Flavor;
using ivw::InvarianceParams;
using ivw::ModelSpec;
using ivw::ObjectiveGrads;
using ivw::ObjectiveSettings;
using ivw::ObjectiveValue;
using ivw::VariationalPosterior;

namespace {

// 4-pixel (2x2), 2-class toy fixture used for the full gradient check.
struct Fixture {
  ModelSpec spec;
  ivw::FirstLayer first;
  VariationalPosterior q;
  InvarianceParams params;
  Batch batch;
  ObjectiveSettings settings;

  Fixture() {
    spec.flavor = Flavor::RFF;
    spec.hidden = 6;
    spec.image_mode = true;
    spec.height = spec.width = 2;
    spec.classes = 2;
    spec.rff_lengthscale = 0.8;
    spec.blur_sigma = 0.1;
    first = ivw::init_first_layer(spec, 3);

    q = VariationalPosterior::init(2, 6, 1.0);
    ivw::Rng rng = ivw::Rng::stream(4, 0);
    for (int c = 0; c < 2; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      for (int i = 0; i < 6; ++i) {
        q.mu[ci][i] = rng.gaussian() * 0.4;
        q.log_diag[ci][i] = rng.uniform(-0.4, 0.2);
        for (int j = 0; j < i; ++j) q.lower_strict[ci](i, j) = rng.gaussian() * 0.15;
      }
    }

    params.eta << 0.1, -0.05, 0.6, 0.08, -0.04, 0.12;
    params.trainable = {{true, true, true, true, true, true}};

    batch.x.resize(4, 3);
    for (Eigen::Index i = 0; i < batch.x.size(); ++i) batch.x(i) = rng.uniform();
    batch.labels = {0, 1, 1};

    settings.sample_count = 3;
    settings.theta_samples = 2;
    settings.noise_seed = 11;  // frozen for every evaluation
  }
};

double objective_at(const Fixture& f, const VariationalPosterior& q,
                    const ivw::FirstLayer& first, const InvarianceParams& params) {
  return ivw::sgvb_objective(f.spec, first, q, params, f.batch, 50, f.settings)
      .objective;
}

}  // namespace

TEST_CASE("zero weights give a log C cross-entropy term") {
  Fixture f;
  VariationalPosterior q0 = VariationalPosterior::init(2, 6, 1.0);
  for (auto& ld : q0.log_diag) ld.setConstant(-745.0);  // effectively L = 0
  const ObjectiveValue v =
      ivw::sgvb_objective(f.spec, f.first, q0, f.params, f.batch, 50, f.settings);
  CHECK(v.ce_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("objective equals N * loglik - KL and terms are consistent") {
  Fixture f;
  const ObjectiveValue v =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, f.settings);
  CHECK(v.objective == doctest::Approx(50.0 * (-v.ce_term) - v.kl_term).epsilon(1e-12));
  CHECK(v.kl_term == doctest::Approx(ivw::kl_to_prior(f.q)).epsilon(1e-12));
}

TEST_CASE("frozen noise makes the estimator deterministic") {
  Fixture f;
  const double a = objective_at(f, f.q, f.first, f.params);
  const double b = objective_at(f, f.q, f.first, f.params);
  CHECK(a == b);
}

TEST_CASE("half-batch average equals the full-batch objective") {
  Fixture f;
  f.batch.x.resize(4, 4);
  ivw::Rng rng = ivw::Rng::stream(6, 0);
  for (Eigen::Index i = 0; i < f.batch.x.size(); ++i) f.batch.x(i) = rng.uniform();
  f.batch.labels = {0, 1, 0, 1};
  const int n = 40;
  const ObjectiveValue full =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, n, f.settings);
  Batch first_half{f.batch.x.leftCols(2), {0, 1}};
  Batch second_half{f.batch.x.rightCols(2), {0, 1}};
  const ObjectiveValue a =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, first_half, n, f.settings);
  const ObjectiveValue b =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, second_half, n, f.settings);
  CHECK(0.5 * (a.objective + b.objective) ==
        doctest::Approx(full.objective).epsilon(1e-10));
}

TEST_CASE("full SGVB gradient matches frozen-noise finite differences") {
  Fixture f;
  ObjectiveGrads grads;
  ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, f.settings, &grads);
  const double h = 1e-6;
  const double tol = 1e-4;

  for (int i = 0; i < 6; ++i) {
    InvarianceParams p = f.params, m = f.params;
    p.eta[i] += h;
    m.eta[i] -= h;
    const double fd =
        (objective_at(f, f.q, f.first, p) - objective_at(f, f.q, f.first, m)) / (2 * h);
    CHECK(std::abs(grads.d_eta[i] - fd) < tol * std::max(1.0, std::abs(fd)));
  }

  for (int c = 0; c < 2; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    for (int i = 0; i < 6; ++i) {
      {
        VariationalPosterior p = f.q, m = f.q;
        p.mu[ci][i] += h;
        m.mu[ci][i] -= h;
        const double fd =
            (objective_at(f, p, f.first, f.params) - objective_at(f, m, f.first, f.params)) /
            (2 * h);
        CHECK(std::abs(grads.d_mu[ci][i] - fd) < tol * std::max(1.0, std::abs(fd)));
      }
      {
        VariationalPosterior p = f.q, m = f.q;
        p.log_diag[ci][i] += h;
        m.log_diag[ci][i] -= h;
        const double fd =
            (objective_at(f, p, f.first, f.params) - objective_at(f, m, f.first, f.params)) /
            (2 * h);
        CHECK(std::abs(grads.d_log_diag[ci][i] - fd) < tol * std::max(1.0, std::abs(fd)));
      }
      for (int j = 0; j < i; ++j) {
        VariationalPosterior p = f.q, m = f.q;
        p.lower_strict[ci](i, j) += h;
        m.lower_strict[ci](i, j) -= h;
        const double fd =
            (objective_at(f, p, f.first, f.params) - objective_at(f, m, f.first, f.params)) /
            (2 * h);
        CHECK(std::abs(grads.d_lower_strict[ci](i, j) - fd) <
              tol * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("masked eta coordinates receive exactly zero gradient") {
  Fixture f;
  f.params.trainable = {{false, false, true, false, false, false}};
  ObjectiveGrads grads;
  ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, f.settings, &grads);
  for (int i = 0; i < 6; ++i) {
    if (i != 2) CHECK(grads.d_eta[i] == 0.0);
  }
  CHECK(grads.d_eta[2] != 0.0);
}

TEST_CASE("ReLU flavor trains the first layer and its gradient checks out") {
  Fixture f;
  f.spec.flavor = Flavor::ReLU;
  // nudge eta away from values that put ReLU kinks on the FD path
  f.spec.rff_lengthscale = 0.8;
  f.first = ivw::init_first_layer(f.spec, 5);
  REQUIRE(f.first.trainable);
  ObjectiveGrads grads;
  ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, f.settings, &grads);
  REQUIRE(grads.d_w1.rows() == f.first.W1.rows());
  const double h = 1e-6;
  int checked = 0;
  for (Eigen::Index i = 0; i < f.first.W1.size() && checked < 8; i += 3, ++checked) {
    ivw::FirstLayer p = f.first, m = f.first;
    p.W1(i) += h;
    m.W1(i) -= h;
    const double fd =
        (objective_at(f, f.q, p, f.params) - objective_at(f, f.q, m, f.params)) /
        (2 * h);
    CHECK(std::abs(grads.d_w1(i) - fd) < 2e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("point estimate: zero W2 gives log C, gradient matches FD") {
  Fixture f;
  const Eigen::MatrixXd w2_zero = Eigen::MatrixXd::Zero(2, 6);
  const ObjectiveValue v = ivw::point_estimate_objective(
      f.spec, f.first, w2_zero, f.params, f.batch, f.settings);
  CHECK(v.ce_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(v.kl_term == 0.0);

  ivw::Rng rng = ivw::Rng::stream(8, 0);
  Eigen::MatrixXd w2(2, 6);
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2(i) = rng.gaussian() * 0.5;
  ObjectiveGrads grads;
  ivw::point_estimate_objective(f.spec, f.first, w2, f.params, f.batch, f.settings,
                                &grads);
  auto value_at = [&](const Eigen::MatrixXd& w, const InvarianceParams& params) {
    return ivw::point_estimate_objective(f.spec, f.first, w, params, f.batch,
                                         f.settings)
        .objective;
  };
  const double h = 1e-6;
  for (int i = 0; i < 6; ++i) {
    InvarianceParams p = f.params, m = f.params;
    p.eta[i] += h;
    m.eta[i] -= h;
    const double fd = (value_at(w2, p) - value_at(w2, m)) / (2 * h);
    CHECK(std::abs(grads.d_eta[i] - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (Eigen::Index i = 0; i < w2.size(); i += 2) {
    Eigen::MatrixXd p = w2, m = w2;
    p(i) += h;
    m(i) -= h;
    const double fd = (value_at(p, f.params) - value_at(m, f.params)) / (2 * h);
    CHECK(std::abs(grads.d_w2(i) - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("empty batch and bad shapes are rejected") {
  Fixture f;
  Batch empty;
  empty.x.resize(4, 0);
  CHECK_THROWS_AS(
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, empty, 50, f.settings),
      std::invalid_argument);
  Batch bad;
  bad.x.resize(5, 2);
  bad.labels = {0, 1};
  CHECK_THROWS_AS(
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, bad, 50, f.settings),
      std::invalid_argument);
}

TEST_CASE("logit averaging differs from probability averaging but stays valid") {
  Fixture f;
  ObjectiveSettings alt = f.settings;
  alt.average_logits = true;
  const double pa =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, f.settings)
          .objective;
  const double la =
      ivw::sgvb_objective(f.spec, f.first, f.q, f.params, f.batch, 50, alt).objective;
  CHECK(std::isfinite(pa));
  CHECK(std::isfinite(la));
  CHECK(pa != la);
}
