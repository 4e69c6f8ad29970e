#include "ivw/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ivw/rng.hpp"
#include "ivw/warp.hpp"

namespace ivw {

void ModelSpec::validate() const {
  if (hidden < 1) throw std::invalid_argument("ModelSpec: hidden must be >= 1");
  if (classes < 2) throw std::invalid_argument("ModelSpec: classes must be >= 2");
  if (image_mode && (height < 2 || width < 2)) {
    throw std::invalid_argument("ModelSpec: image grid must be at least 2x2");
  }
  if (!image_mode && coord_dim != 2) {
    throw std::invalid_argument("ModelSpec: coordinate mode supports 2-d input");
  }
  if (rff_lengthscale <= 0.0) {
    throw std::invalid_argument("ModelSpec: rff_lengthscale must be positive");
  }
}

FirstLayer init_first_layer(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int d = spec.input_dim();
  FirstLayer first;
  first.W1.resize(spec.hidden, d);
  Rng rng = Rng::stream(seed, 101);
  if (spec.flavor == Flavor::RFF) {
    const double inv_ls = 1.0 / spec.rff_lengthscale;
    for (int i = 0; i < spec.hidden; ++i)
      for (int j = 0; j < d; ++j) first.W1(i, j) = inv_ls * rng.gaussian();
    first.phase.resize(spec.hidden);
    for (int i = 0; i < spec.hidden; ++i)
      first.phase[i] = rng.uniform(0.0, 2.0 * M_PI);
    first.trainable = false;
  } else {
    const double bound = std::sqrt(6.0 / (d + spec.hidden));
    for (int i = 0; i < spec.hidden; ++i)
      for (int j = 0; j < d; ++j) first.W1(i, j) = rng.uniform(-bound, bound);
    first.phase.resize(0);
    first.trainable = true;
  }
  return first;
}

Eigen::MatrixXd activate(const ModelSpec& spec, const Eigen::MatrixXd& preact) {
  if (spec.flavor == Flavor::RFF) {
    const double s = std::sqrt(2.0 / spec.hidden);
    return s * preact.array().cos().matrix();
  }
  return preact.cwiseMax(0.0);
}

namespace {

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::ArrayXd e = (logits.col(j).array() - logits.col(j).maxCoeff()).exp();
    p.col(j) = e / e.sum();
  }
  return p;
}

}  // namespace

Eigen::MatrixXd batch_probs(const ModelSpec& spec, const FirstLayer& first,
                            const Eigen::MatrixXd& W2, const Eigen::MatrixXd& x,
                            const std::vector<AffineTransform>& transforms,
                            bool average_logits) {
  spec.validate();
  if (transforms.empty()) throw std::invalid_argument("batch_probs: no transforms");
  if (x.rows() != spec.input_dim()) {
    throw std::invalid_argument("batch_probs: input dimensionality mismatch");
  }
  const Eigen::Index m = x.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(spec.classes, m);

  BlurPlan blur(spec.height, spec.width, spec.image_mode ? spec.blur_sigma : 0.0);
  for (const AffineTransform& t : transforms) {
    Eigen::MatrixXd pre;
    if (spec.image_mode) {
      WarpPlan plan(spec.height, spec.width, t.matrix);
      Eigen::MatrixXd warped, blurred;
      plan.apply(first.W1, warped);
      blur.apply(warped, blurred);
      pre.noalias() = blurred * x;
    } else {
      // weight-space path W1 * T == input-space path on T-transformed points
      Eigen::MatrixXd xt(2, m);
      xt.row(0) = t.matrix(0, 0) * x.row(0) + t.matrix(0, 1) * x.row(1) +
                  Eigen::RowVectorXd::Constant(m, t.matrix(0, 2));
      xt.row(1) = t.matrix(1, 0) * x.row(0) + t.matrix(1, 1) * x.row(1) +
                  Eigen::RowVectorXd::Constant(m, t.matrix(1, 2));
      pre.noalias() = first.W1 * xt;
    }
    if (spec.flavor == Flavor::RFF) pre.colwise() += first.phase;
    Eigen::MatrixXd logits = W2 * activate(spec, pre);
    acc += average_logits ? logits : softmax_cols(logits);
  }
  acc /= static_cast<double>(transforms.size());
  return average_logits ? softmax_cols(acc) : acc;
}

Eigen::VectorXd g_forward(const ModelSpec& spec, const FirstLayer& first,
                          const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                          const AffineTransform& transform) {
  return batch_probs(spec, first, W2, x, {transform}).col(0);
}

Eigen::VectorXd f_invariant(const ModelSpec& spec, const FirstLayer& first,
                            const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                            const std::vector<AffineTransform>& transforms,
                            bool average_logits) {
  return batch_probs(spec, first, W2, x, transforms, average_logits).col(0);
}

Prediction predict(const ModelSpec& spec, const FirstLayer& first,
                   const Eigen::MatrixXd& W2, const Eigen::VectorXd& x,
                   const std::vector<AffineTransform>& transforms) {
  Prediction p;
  p.probs = f_invariant(spec, first, W2, x, transforms);
  p.label = 0;
  for (int c = 1; c < spec.classes; ++c) {
    if (p.probs[c] > p.probs[p.label]) p.label = c;
  }
  return p;
}

}  // namespace ivw
