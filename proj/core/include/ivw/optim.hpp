#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

namespace ivw {

// lr0 * 0.5 * (1 + cos(pi * t / t_max)); t past t_max clamps to 0.
double cosine_lr(int t, double lr0, int t_max);

// Adam with cosine-annealed learning rate. One instance owns the moment
// state for every trainable tensor, keyed by name; all tensors updated in
// one iteration share the same bias-correction step t.
class Adam {
 public:
  struct Hyper {
    double lr0 = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    int total_steps = 1;
  };

  explicit Adam(const Hyper& hyper) : hyper_(hyper) {}

  // Advances the step counter and fixes the learning rate for the updates
  // that follow. The first step uses lr0 exactly.
  void begin_step();

  // Gradient-descent update (pass the gradient of the loss being
  // minimized). lr_scale allows a per-tensor learning-rate multiplier.
  // Throws std::runtime_error naming the tensor on non-finite gradients.
  void update(const std::string& name, Eigen::Ref<Eigen::MatrixXd> param,
              const Eigen::MatrixXd& grad, double lr_scale = 1.0);

  int step_count() const { return t_; }
  double current_lr() const { return lr_; }
  const Hyper& hyper() const { return hyper_; }

  // Moment state, exposed for checkpointing.
  struct Moments {
    Eigen::MatrixXd m, v;
  };
  std::map<std::string, Moments>& state() { return state_; }
  const std::map<std::string, Moments>& state() const { return state_; }
  void set_step_count(int t) { t_ = t; }

 private:
  Hyper hyper_;
  int t_ = 0;
  double lr_ = 0.0;
  std::map<std::string, Moments> state_;
};

}  // namespace ivw
