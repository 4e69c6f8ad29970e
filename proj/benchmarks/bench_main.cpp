#include <benchmark/benchmark.h>

#include "ivw/liegroup.hpp"
#include "ivw/objective.hpp"
#include "ivw/rng.hpp"
#include "ivw/warp.hpp"

namespace {

void BM_ExpAffine(benchmark::State& state) {
  ivw::Vec6 eta;
  eta << 0.1, -0.2, 1.0, 0.05, -0.05, 0.2;
  ivw::Vec6 eps = ivw::Vec6::Constant(0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ivw::exp_affine(eta, eps).matrix);
  }
}
BENCHMARK(BM_ExpAffine);

void BM_ExpAffineGrad(benchmark::State& state) {
  ivw::Vec6 eta;
  eta << 0.1, -0.2, 1.0, 0.05, -0.05, 0.2;
  ivw::Vec6 eps = ivw::Vec6::Constant(0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ivw::exp_affine_grad(eta, eps).d_eta[2]);
  }
}
BENCHMARK(BM_ExpAffineGrad);

void BM_WarpApply(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  ivw::Rng rng = ivw::Rng::stream(1, 0);
  Eigen::MatrixXd w(hidden, 28 * 28);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
  ivw::Vec6 eta;
  eta << 0, 0, 0.8, 0, 0, 0;
  ivw::WarpPlan plan(28, 28, ivw::exp_affine(eta, ivw::Vec6::Ones()).matrix);
  Eigen::MatrixXd out;
  for (auto _ : state) {
    plan.apply(w, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_WarpApply)->Arg(256)->Arg(1000);

void BM_SgvbStep(benchmark::State& state) {
  const int sample_count = static_cast<int>(state.range(0));
  ivw::ModelSpec spec;
  spec.hidden = 256;
  spec.classes = 10;
  ivw::FirstLayer first = ivw::init_first_layer(spec, 7);
  ivw::VariationalPosterior q =
      ivw::VariationalPosterior::init(spec.classes, spec.hidden, 1.0);
  ivw::InvarianceParams params;
  params.eta[2] = 1.0;
  params.trainable[2] = true;

  ivw::Rng rng = ivw::Rng::stream(2, 0);
  ivw::Batch batch;
  batch.x.resize(spec.input_dim(), 32);
  for (Eigen::Index i = 0; i < batch.x.size(); ++i) batch.x(i) = rng.uniform();
  batch.labels.resize(32);
  for (auto& y : batch.labels) y = static_cast<int>(rng.below(10));

  ivw::ObjectiveSettings settings;
  settings.sample_count = sample_count;
  ivw::ObjectiveGrads grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ivw::sgvb_objective(spec, first, q, params, batch, 5000, settings, &grads));
  }
}
BENCHMARK(BM_SgvbStep)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
