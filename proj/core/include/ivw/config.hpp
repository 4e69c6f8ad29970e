#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivw/liegroup.hpp"
#include "ivw/model.hpp"

namespace ivw {

// Where a dataset comes from. "digits" and "toy" are generated procedurally;
// the others read files. Transforms listed here are applied per-image after
// loading, with independent draws (see make_transformed).
struct DataConfig {
  std::string kind = "digits";  // mnist | cifar10 | digits | toy | cache
  std::string images_path;      // mnist
  std::string labels_path;      // mnist
  std::vector<std::string> batch_paths;  // cifar10
  std::string cache_path;       // cache
  int count = 5000;             // digits
  std::vector<std::string> transforms;
  std::uint64_t seed = 0;
};

// One experiment, loadable from strict JSON (unknown keys are rejected so
// typos fail loudly instead of silently running the default).
struct ExperimentConfig {
  // model
  std::string flavor = "rff";  // rff | relu
  int hidden = 1024;
  double rff_lengthscale = 0.3;
  double blur_sigma = 0.1;

  // objective
  std::string objective = "vi";  // vi | point_estimate
  double prior_variance = 1.0;
  int sample_count = 32;
  int theta_samples = 1;
  bool deterministic_transforms = false;
  bool average_logits = false;

  // invariance
  std::array<double, 6> eta_init{{0, 0, 0, 0, 0, 0}};
  std::array<bool, 6> eta_trainable{{false, false, false, false, false, false}};
  double eta_lr_scale = 1.0;  // per-tensor learning-rate multiplier for eta

  // optimization
  int iterations = 3000;
  int batch_size = 128;
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = final checkpoint only

  // evaluation
  int eval_sample_count = 0;  // 0 = reuse sample_count

  DataConfig train_data;
  DataConfig test_data;

  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;  // canonical form, stable key order
  std::uint64_t hash() const;   // FNV-1a of the canonical form

  // The dataset supplies geometry and class count; the config the rest.
  ModelSpec model_spec(int height, int width, int classes) const;
  InvarianceParams invariance_params() const;
  void validate() const;  // throws std::invalid_argument
};

}  // namespace ivw
