#pragma once

#include <functional>
#include <string>

#include "ivw/config.hpp"
#include "ivw/data.hpp"
#include "ivw/objective.hpp"
#include "ivw/persist.hpp"

namespace ivw {

// Materializes a dataset described by a DataConfig, applying any listed
// per-image transforms afterwards.
Dataset load_dataset(const DataConfig& cfg);

struct TrainOptions {
  std::string metrics_path;     // CSV; empty disables
  std::string checkpoint_path;  // empty disables
  std::string resume_path;      // continue from this checkpoint
  int log_every = 50;           // metrics row / progress cadence
  std::function<void(int iteration, const ObjectiveValue&, const Vec6& eta)> progress;
};

// Runs the configured optimization on train_set and returns the final
// state. Deterministic in (config, train_set): batch choice and all noise
// are derived from (seed, iteration), so resuming from a checkpoint at
// step k reproduces the uninterrupted run exactly. Throws std::runtime_error
// if the objective or a gradient goes non-finite.
Checkpoint train(const ExperimentConfig& config, const Dataset& train_set,
                 const TrainOptions& options = {});

struct EvalResult {
  double accuracy = 0.0;
  double mean_loglik = 0.0;        // mean over examples of log f_hat[y]
  double elbo_per_example = 0.0;   // mean_loglik - KL/N (KL = 0 for point mode)
};

EvalResult evaluate(const ExperimentConfig& config, const Checkpoint& state,
                    const Dataset& test_set);

}  // namespace ivw
