#include "ivw/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "ivw/optim.hpp"
#include "ivw/rng.hpp"

namespace ivw {

Dataset load_dataset(const DataConfig& cfg) {
  Dataset base;
  if (cfg.kind == "mnist") {
    base = load_mnist(cfg.images_path, cfg.labels_path);
  } else if (cfg.kind == "cifar10") {
    base = load_cifar10(cfg.batch_paths);
  } else if (cfg.kind == "digits") {
    base = make_digits(cfg.seed, cfg.count);
  } else if (cfg.kind == "toy") {
    base = make_toy(cfg.seed);
  } else if (cfg.kind == "cache") {
    base = load_dataset_cache(cfg.cache_path);
  } else {
    throw std::invalid_argument("load_dataset: unknown kind '" + cfg.kind + "'");
  }
  if (!cfg.transforms.empty()) {
    std::vector<TransformKind> kinds;
    kinds.reserve(cfg.transforms.size());
    for (const std::string& name : cfg.transforms) {
      kinds.push_back(parse_transform_kind(name));
    }
    base = make_transformed(base, kinds, cfg.seed);
  }
  return base;
}

namespace {

// Noise for iteration t is a pure function of (seed, t): checkpoint/resume
// and the uninterrupted run consume identical streams.
std::uint64_t iteration_noise_seed(std::uint64_t seed, int iteration) {
  return Rng::stream(seed, 3'000'000 + static_cast<std::uint64_t>(iteration)).next_u64();
}

std::vector<int> pick_batch(std::uint64_t seed, int iteration, int n, int m) {
  Rng rng = Rng::stream(seed, 4'000'000 + static_cast<std::uint64_t>(iteration));
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(m, n);
  for (int j = 0; j < take; ++j) {
    const int k = j + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - j)));
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(k)]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

Batch gather_batch(const Dataset& data, const std::vector<int>& idx) {
  Batch b;
  b.x.resize(data.x.rows(), static_cast<Eigen::Index>(idx.size()));
  b.labels.resize(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    b.x.col(static_cast<Eigen::Index>(j)) = data.x.col(idx[j]);
    b.labels[j] = data.labels[static_cast<std::size_t>(idx[j])];
  }
  return b;
}

void write_metrics_header(std::ofstream& out) {
  out << "iter,elbo,ce_term,kl_term,lr";
  for (int i = 1; i <= 6; ++i) out << ",eta_" << i;
  out << ",train_acc\n";
}

void write_metrics_row(std::ofstream& out, int iter, const ObjectiveValue& v,
                       double lr, const Vec6& eta) {
  out << iter << ',' << std::setprecision(10) << v.objective << ',' << v.ce_term
      << ',' << v.kl_term << ',' << lr;
  for (int i = 0; i < 6; ++i) out << ',' << eta[i];
  out << ',' << v.batch_accuracy << '\n';
  out.flush();
}

}  // namespace

Checkpoint train(const ExperimentConfig& config, const Dataset& train_set,
                 const TrainOptions& options) {
  config.validate();
  train_set.validate();
  const int n = train_set.size();
  const bool point_mode = config.objective == "point_estimate";

  Checkpoint state;
  Adam::Hyper hyper;
  hyper.lr0 = config.lr0;
  hyper.beta1 = config.beta1;
  hyper.beta2 = config.beta2;
  hyper.total_steps = config.iterations;
  Adam adam(hyper);

  if (!options.resume_path.empty()) {
    state = load_checkpoint(options.resume_path);
    if (state.config_hash != config.hash()) {
      throw std::invalid_argument(
          "train: checkpoint was produced by a different configuration");
    }
    adam.set_step_count(state.adam_step);
    for (auto& [name, mo] : state.adam_state) adam.state()[name] = mo;
  } else {
    state.spec = config.model_spec(train_set.height, train_set.width, train_set.classes);
    state.first = init_first_layer(state.spec, config.seed);
    state.point_estimate = point_mode;
    state.invariance = config.invariance_params();
    state.seed = config.seed;
    state.config_hash = config.hash();
    if (point_mode) {
      state.w2_point = Eigen::MatrixXd::Zero(state.spec.classes, state.spec.hidden);
    } else {
      state.posterior = VariationalPosterior::init(state.spec.classes,
                                                   state.spec.hidden,
                                                   config.prior_variance);
    }
  }

  std::ofstream metrics;
  if (!options.metrics_path.empty()) {
    const bool fresh = options.resume_path.empty();
    metrics.open(options.metrics_path, fresh ? std::ios::trunc : std::ios::app);
    if (!metrics) {
      throw std::runtime_error("train: cannot open metrics file " + options.metrics_path);
    }
    if (fresh) write_metrics_header(metrics);
  }

  ObjectiveSettings settings;
  settings.sample_count = config.sample_count;
  settings.theta_samples = config.theta_samples;
  settings.deterministic_transforms = config.deterministic_transforms;
  settings.average_logits = config.average_logits;

  for (int it = state.step; it < config.iterations; ++it) {
    settings.noise_seed = iteration_noise_seed(config.seed, it);
    const Batch batch =
        gather_batch(train_set, pick_batch(config.seed, it, n, config.batch_size));

    ObjectiveGrads grads;
    ObjectiveValue v;
    if (point_mode) {
      v = point_estimate_objective(state.spec, state.first, state.w2_point,
                                   state.invariance, batch, settings, &grads);
    } else {
      v = sgvb_objective(state.spec, state.first, state.posterior, state.invariance,
                         batch, n, settings, &grads);
    }
    if (!std::isfinite(v.objective)) {
      throw std::runtime_error("train: non-finite objective at iteration " +
                               std::to_string(it));
    }

    // Adam descends, the objective is maximized: negate every gradient.
    adam.begin_step();
    if (state.invariance.active_count() > 0) {
      Eigen::MatrixXd eta = state.invariance.eta;
      adam.update("eta", eta, Eigen::MatrixXd(-grads.d_eta), config.eta_lr_scale);
      state.invariance.eta = eta.col(0);
    }
    if (state.first.trainable) {
      adam.update("w1", state.first.W1, -grads.d_w1);
    }
    if (point_mode) {
      adam.update("w2", state.w2_point, -grads.d_w2);
    } else {
      for (int c = 0; c < state.posterior.classes; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const std::string suffix = "." + std::to_string(c);
        Eigen::MatrixXd mu = state.posterior.mu[ci];
        adam.update("mu" + suffix, mu, Eigen::MatrixXd(-grads.d_mu[ci]));
        state.posterior.mu[ci] = mu.col(0);
        adam.update("lower" + suffix, state.posterior.lower_strict[ci],
                    -grads.d_lower_strict[ci]);
        Eigen::MatrixXd ld = state.posterior.log_diag[ci];
        adam.update("logdiag" + suffix, ld, Eigen::MatrixXd(-grads.d_log_diag[ci]));
        state.posterior.log_diag[ci] = ld.col(0);
      }
    }
    state.step = it + 1;

    const bool log_now = options.log_every > 0 &&
                         ((it + 1) % options.log_every == 0 || it + 1 == config.iterations);
    if (metrics.is_open() && log_now) {
      write_metrics_row(metrics, it + 1, v, adam.current_lr(), state.invariance.eta);
    }
    if (options.progress && log_now) {
      options.progress(it + 1, v, state.invariance.eta);
    }
    if (!options.checkpoint_path.empty() && config.checkpoint_every > 0 &&
        (it + 1) % config.checkpoint_every == 0 && it + 1 < config.iterations) {
      state.adam_step = adam.step_count();
      state.adam_state = adam.state();
      save_checkpoint(options.checkpoint_path, state);
    }
  }

  state.adam_step = adam.step_count();
  state.adam_state = adam.state();
  if (!options.checkpoint_path.empty()) {
    save_checkpoint(options.checkpoint_path, state);
  }
  return state;
}

EvalResult evaluate(const ExperimentConfig& config, const Checkpoint& state,
                    const Dataset& test_set) {
  test_set.validate();
  const int n = test_set.size();
  ObjectiveSettings settings;
  settings.sample_count =
      config.eval_sample_count > 0 ? config.eval_sample_count : config.sample_count;
  settings.theta_samples = config.theta_samples;
  settings.deterministic_transforms = config.deterministic_transforms;
  settings.average_logits = config.average_logits;
  settings.noise_seed = config.seed;  // one fixed draw for the whole evaluation

  double ll_sum = 0.0;
  double hits = 0.0;
  const int chunk = std::max(1, config.batch_size);
  for (int off = 0; off < n; off += chunk) {
    const int count = std::min(chunk, n - off);
    Batch b;
    b.x = test_set.x.middleCols(off, count);
    b.labels.assign(test_set.labels.begin() + off,
                    test_set.labels.begin() + off + count);
    ObjectiveValue v;
    if (state.point_estimate) {
      v = point_estimate_objective(state.spec, state.first, state.w2_point,
                                   state.invariance, b, settings);
    } else {
      v = sgvb_objective(state.spec, state.first, state.posterior, state.invariance,
                         b, n, settings);
    }
    ll_sum += -v.ce_term * count;
    hits += v.batch_accuracy * count;
  }

  EvalResult r;
  r.accuracy = hits / n;
  r.mean_loglik = ll_sum / n;
  r.elbo_per_example =
      r.mean_loglik - (state.point_estimate ? 0.0 : kl_to_prior(state.posterior) / n);
  return r;
}

}  // namespace ivw
