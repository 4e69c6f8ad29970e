#include "ivw/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ivw {

double cosine_lr(int t, double lr0, int t_max) {
  if (t < 0) throw std::invalid_argument("cosine_lr: negative step");
  if (t >= t_max) return 0.0;
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) / t_max));
}

void Adam::begin_step() {
  lr_ = cosine_lr(t_, hyper_.lr0, hyper_.total_steps);
  ++t_;
}

void Adam::update(const std::string& name, Eigen::Ref<Eigen::MatrixXd> param,
                  const Eigen::MatrixXd& grad, double lr_scale) {
  if (t_ == 0) throw std::logic_error("Adam::update before begin_step");
  if (!grad.allFinite()) {
    throw std::runtime_error("Adam: non-finite gradient for parameter '" + name + "'");
  }
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw std::invalid_argument("Adam: gradient shape mismatch for '" + name + "'");
  }
  auto it = state_.find(name);
  if (it == state_.end()) {
    Moments mo;
    mo.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    mo.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    it = state_.emplace(name, std::move(mo)).first;
  }
  Moments& mo = it->second;
  mo.m = hyper_.beta1 * mo.m + (1.0 - hyper_.beta1) * grad;
  mo.v = hyper_.beta2 * mo.v + (1.0 - hyper_.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(hyper_.beta1, t_);
  const double bc2 = 1.0 - std::pow(hyper_.beta2, t_);
  const Eigen::ArrayXXd m_hat = mo.m.array() / bc1;
  const Eigen::ArrayXXd v_hat = mo.v.array() / bc2;
  param.array() -= lr_ * lr_scale * m_hat / (v_hat.sqrt() + hyper_.eps_hat);
}

}  // namespace ivw
