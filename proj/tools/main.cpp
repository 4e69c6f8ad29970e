// Command-line front end for the invariant-weights library: dataset
// preparation, training, evaluation and a couple of export helpers.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ivw/export.hpp"
#include "ivw/train.hpp"
#include "ivw/warp.hpp"

namespace {

constexpr int kExitUsage = 2;     // bad arguments / malformed config
constexpr int kExitNumeric = 3;   // non-finite loss or gradient

ivw::ExperimentConfig load_config(const std::string& path) {
  return ivw::ExperimentConfig::from_json_file(path);
}

int cmd_dataset(const std::string& kind, int count, std::uint64_t seed,
                const std::vector<std::string>& transforms,
                const std::string& images_path, const std::string& labels_path,
                const std::string& out, const std::string& preview) {
  ivw::DataConfig cfg;
  cfg.kind = kind;
  cfg.count = count;
  cfg.seed = seed;
  cfg.transforms = transforms;
  cfg.images_path = images_path;
  cfg.labels_path = labels_path;
  const ivw::Dataset data = ivw::load_dataset(cfg);
  ivw::save_dataset_cache(out, data);
  std::cout << "wrote " << data.size() << " examples (" << data.height << "x"
            << data.width << ", " << data.classes << " classes) to " << out << "\n";
  if (!preview.empty() && data.image_mode()) {
    const int n = std::min(32, data.size());
    // reuse the montage helper: images transpose into a filters-per-row matrix
    Eigen::MatrixXd rows(n, data.x.rows());
    for (int i = 0; i < n; ++i) rows.row(i) = data.x.col(i).transpose();
    ivw::write_pgm(preview, ivw::filter_montage(rows, data.height, data.width));
    std::cout << "preview montage: " << preview << "\n";
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& resume, bool quiet) {
  const ivw::ExperimentConfig config = load_config(config_path);
  const ivw::Dataset train_set = ivw::load_dataset(config.train_data);

  ivw::TrainOptions options;
  options.metrics_path = out_dir + "/metrics.csv";
  options.checkpoint_path = out_dir + "/model.ivnw";
  options.resume_path = resume;
  if (!quiet) {
    options.progress = [](int it, const ivw::ObjectiveValue& v, const ivw::Vec6& eta) {
      std::cout << "iter " << it << "  objective " << v.objective << "  ce "
                << v.ce_term << "  acc " << v.batch_accuracy << "  eta3 " << eta[2]
                << std::endl;
    };
  }
  const ivw::Checkpoint state = ivw::train(config, train_set, options);

  const ivw::Dataset test_set = ivw::load_dataset(config.test_data);
  const ivw::EvalResult r = ivw::evaluate(config, state, test_set);
  std::cout << "final: test_accuracy " << r.accuracy << "  test_elbo_per_example "
            << r.elbo_per_example << "  eta3 " << state.invariance.eta[2] << "\n";

  std::ofstream summary(out_dir + "/summary.json");
  summary << "{\n  \"test_accuracy\": " << r.accuracy
          << ",\n  \"test_elbo_per_example\": " << r.elbo_per_example
          << ",\n  \"test_mean_loglik\": " << r.mean_loglik << ",\n  \"eta\": [";
  for (int i = 0; i < 6; ++i) summary << (i ? ", " : "") << state.invariance.eta[i];
  summary << "]\n}\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path) {
  const ivw::ExperimentConfig config = load_config(config_path);
  const ivw::Checkpoint state = ivw::load_checkpoint(checkpoint_path);
  const ivw::Dataset test_set = ivw::load_dataset(config.test_data);
  const ivw::EvalResult r = ivw::evaluate(config, state, test_set);
  std::cout << "accuracy " << r.accuracy << "\nelbo_per_example " << r.elbo_per_example
            << "\nmean_loglik " << r.mean_loglik << "\n";
  return 0;
}

// One montage row per filter: S warped copies under transforms drawn from
// the checkpoint's invariance distribution.
int cmd_filters(const std::string& checkpoint_path, const std::string& out, int count,
                int samples, bool deterministic, std::uint64_t seed) {
  const ivw::Checkpoint state = ivw::load_checkpoint(checkpoint_path);
  if (!state.spec.image_mode) {
    std::cerr << "filters: checkpoint is not an image model\n";
    return kExitUsage;
  }
  const int n = std::min(count, static_cast<int>(state.first.W1.rows()));
  const std::vector<ivw::AffineTransform> transforms =
      deterministic ? ivw::sample_deterministic(state.invariance, samples)
                    : ivw::sample_stochastic(state.invariance, samples, seed);
  Eigen::MatrixXd rows(n * samples, state.first.W1.cols());
  for (std::size_t s = 0; s < transforms.size(); ++s) {
    const ivw::WarpPlan plan(state.spec.height, state.spec.width,
                             transforms[s].matrix);
    Eigen::MatrixXd warped;
    plan.apply(state.first.W1.topRows(n), warped);
    for (int i = 0; i < n; ++i) {
      rows.row(i * samples + static_cast<int>(s)) = warped.row(i);
    }
  }
  ivw::write_pgm(out, ivw::filter_montage(rows, state.spec.height, state.spec.width,
                                          0, samples));
  std::cout << "wrote " << out << "\n";
  return 0;
}

// Class-0 probability of the orbit-averaged predictor on a 101x101 grid over
// [-2,2]^2, for visualizing learned invariances on the 2-d toy problem.
int cmd_toy_grid(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& out) {
  const ivw::ExperimentConfig config = load_config(config_path);
  const ivw::Checkpoint state = ivw::load_checkpoint(checkpoint_path);
  if (state.spec.image_mode) {
    std::cerr << "toy-grid: checkpoint is not a coordinate model\n";
    return kExitUsage;
  }
  const int s = config.eval_sample_count > 0 ? config.eval_sample_count
                                             : config.sample_count;
  const std::vector<ivw::AffineTransform> transforms =
      config.deterministic_transforms
          ? ivw::sample_deterministic(state.invariance, s)
          : ivw::sample_stochastic(state.invariance, s, config.seed);
  const Eigen::MatrixXd w2 =
      state.point_estimate ? state.w2_point : state.posterior.mean_weights();

  std::ofstream csv(out);
  csv << "x,y,p0\n";
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      Eigen::VectorXd p(2);
      p << -2.0 + 4.0 * j / 100.0, -2.0 + 4.0 * i / 100.0;
      const Eigen::VectorXd probs =
          ivw::f_invariant(state.spec, state.first, w2, p, transforms,
                           config.average_logits);
      csv << p[0] << ',' << p[1] << ',' << probs[0] << '\n';
    }
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant-weight shallow Bayesian networks"};
  app.require_subcommand(1);

  std::string kind = "digits", images_path, labels_path, out, preview;
  std::vector<std::string> transforms;
  int count = 5000;
  std::uint64_t seed = 0;
  auto* dataset = app.add_subcommand("dataset", "Build and cache a dataset");
  dataset->add_option("--kind", kind, "mnist | cifar10 | digits | toy");
  dataset->add_option("--count", count, "example count (generated kinds)");
  dataset->add_option("--seed", seed);
  dataset->add_option("--transform", transforms,
                      "rotate_full | rotate_partial | translate | scale");
  dataset->add_option("--images", images_path, "IDX image file (mnist)");
  dataset->add_option("--labels", labels_path, "IDX label file (mnist)");
  dataset->add_option("--out", out)->required();
  dataset->add_option("--preview", preview, "PGM montage of the first examples");

  std::string config_path, out_dir = ".", resume, checkpoint_path;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Run a training experiment");
  train->add_option("--config", config_path)->required();
  train->add_option("--out", out_dir, "output directory (metrics, checkpoint)");
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_flag("--quiet", quiet);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test set");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--checkpoint", checkpoint_path)->required();

  int filter_count = 8, filter_samples = 7;
  bool filter_det = false;
  std::uint64_t filter_seed = 0;
  auto* filters = app.add_subcommand(
      "filters", "Export warped first-layer filter banks as PGM");
  filters->add_option("--checkpoint", checkpoint_path)->required();
  filters->add_option("--out", out)->required();
  filters->add_option("--count", filter_count, "number of filter rows");
  filters->add_option("--samples", filter_samples, "warped copies per filter");
  filters->add_flag("--deterministic", filter_det, "equally spaced samples");
  filters->add_option("--seed", filter_seed, "stochastic sampling seed");

  auto* toy = app.add_subcommand("toy-grid", "Export toy decision surface as CSV");
  toy->add_option("--config", config_path)->required();
  toy->add_option("--checkpoint", checkpoint_path)->required();
  toy->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (dataset->parsed()) {
      return cmd_dataset(kind, count, seed, transforms, images_path, labels_path, out,
                         preview);
    }
    if (train->parsed()) return cmd_train(config_path, out_dir, resume, quiet);
    if (eval->parsed()) return cmd_eval(config_path, checkpoint_path);
    if (filters->parsed()) {
      return cmd_filters(checkpoint_path, out, filter_count, filter_samples,
                         filter_det, filter_seed);
    }
    if (toy->parsed()) return cmd_toy_grid(config_path, checkpoint_path, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ivw::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
