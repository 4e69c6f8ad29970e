#include "ivw/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "ivw/tape.hpp"

namespace ivw {

namespace {

void check_batch(const ModelSpec& spec, const Batch& batch) {
  if (batch.x.cols() == 0) throw std::invalid_argument("objective: empty batch");
  if (batch.x.rows() != spec.input_dim()) {
    throw std::invalid_argument("objective: batch dimensionality mismatch");
  }
  if (static_cast<Eigen::Index>(batch.labels.size()) != batch.x.cols()) {
    throw std::invalid_argument("objective: label count mismatch");
  }
}

std::vector<AffineTransform> draw_transforms(const InvarianceParams& params,
                                             const ObjectiveSettings& s) {
  return s.deterministic_transforms
             ? sample_deterministic(params, s.sample_count)
             : sample_stochastic(params, s.sample_count, s.noise_seed);
}

double accuracy_of(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  int hits = 0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    Eigen::Index best = 0;
    probs.col(j).maxCoeff(&best);
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(j)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.cols());
}

struct Graph {
  Tape tape;
  Tape::Id loglik = -1;                // batch-mean log-likelihood, 1x1
  Tape::Id eta_leaf = -1;
  Tape::Id w1_leaf = -1;
  std::vector<Tape::Id> w2_leaves;
  Eigen::MatrixXd mean_probs;          // averaged over theta samples, C x M
};

// Builds the Eq.-2/Eq.-6 computation: per theta sample, the orbit average of
// the network output over the shared transforms, then the picked-log mean.
Graph build_loglik_graph(const ModelSpec& spec, const FirstLayer& first,
                         const std::vector<Eigen::MatrixXd>& w2_samples,
                         const InvarianceParams& params, const Batch& batch,
                         const ObjectiveSettings& settings, bool with_grads,
                         bool w2_trainable) {
  spec.validate();
  check_batch(spec, batch);
  if (settings.sample_count < 1) {
    throw std::invalid_argument("objective: sample_count must be >= 1");
  }

  const bool eta_trainable =
      with_grads && params.active_count() > 0;
  const bool w1_trainable = with_grads && first.trainable;

  Graph g;
  Tape& t = g.tape;
  Eigen::MatrixXd eta_col = params.eta;
  g.eta_leaf = t.leaf(eta_col, eta_trainable);
  g.w1_leaf = t.leaf(first.W1, w1_trainable);
  Tape::Id x_leaf = t.leaf(batch.x, false);
  Tape::Id phase_leaf = -1;
  if (spec.flavor == Flavor::RFF) phase_leaf = t.leaf(first.phase, false);

  const std::vector<AffineTransform> transforms = draw_transforms(params, settings);

  // the transform nodes are shared across theta samples
  std::vector<Tape::Id> t_nodes;
  std::vector<Tape::Id> feature_nodes;  // phi per transform, shared as well
  t_nodes.reserve(transforms.size());
  feature_nodes.reserve(transforms.size());
  for (const AffineTransform& tr : transforms) {
    Tape::Id t_node = t.exp_affine(g.eta_leaf, tr.epsilon);
    t_nodes.push_back(t_node);
    Tape::Id pre;
    if (spec.image_mode) {
      Tape::Id warped = t.warp_rows(g.w1_leaf, t_node, spec.height, spec.width,
                                    spec.blur_sigma);
      pre = t.matmul(warped, x_leaf);
    } else {
      Tape::Id moved = t.transform_points(x_leaf, t_node);
      pre = t.matmul(g.w1_leaf, moved);
    }
    if (spec.flavor == Flavor::RFF) {
      pre = t.add_colvec(pre, phase_leaf);
      feature_nodes.push_back(t.cos_scaled(pre, std::sqrt(2.0 / spec.hidden)));
    } else {
      feature_nodes.push_back(t.relu(pre));
    }
  }

  std::vector<Tape::Id> ll_nodes;
  g.mean_probs = Eigen::MatrixXd::Zero(spec.classes, batch.x.cols());
  for (const Eigen::MatrixXd& w2 : w2_samples) {
    Tape::Id w2_leaf = t.leaf(w2, with_grads && w2_trainable);
    g.w2_leaves.push_back(w2_leaf);
    std::vector<Tape::Id> per_transform;
    per_transform.reserve(feature_nodes.size());
    for (Tape::Id phi : feature_nodes) {
      Tape::Id logits = t.matmul(w2_leaf, phi);
      per_transform.push_back(settings.average_logits ? logits
                                                      : t.softmax_cols(logits));
    }
    Tape::Id fhat = t.mean_nodes(per_transform);
    if (settings.average_logits) fhat = t.softmax_cols(fhat);
    g.mean_probs += t.value(fhat);
    ll_nodes.push_back(t.log_picked_mean(fhat, batch.labels));
  }
  g.mean_probs /= static_cast<double>(w2_samples.size());
  g.loglik = t.mean_nodes(ll_nodes);
  return g;
}

Vec6 masked_eta_grad(const Eigen::MatrixXd& raw, const InvarianceParams& params) {
  Vec6 out = Vec6::Zero();
  for (int i = 0; i < 6; ++i) {
    if (params.trainable[static_cast<std::size_t>(i)]) out[i] = raw(i, 0);
  }
  return out;
}

}  // namespace

ObjectiveValue sgvb_objective(const ModelSpec& spec, const FirstLayer& first,
                              const VariationalPosterior& q,
                              const InvarianceParams& params, const Batch& batch,
                              int dataset_size, const ObjectiveSettings& settings,
                              ObjectiveGrads* grads) {
  q.validate();
  if (q.classes != spec.classes || q.dim != spec.hidden) {
    throw std::invalid_argument("sgvb_objective: posterior shape mismatch");
  }
  if (settings.theta_samples < 1) {
    throw std::invalid_argument("sgvb_objective: theta_samples must be >= 1");
  }
  if (dataset_size < 1) {
    throw std::invalid_argument("sgvb_objective: dataset_size must be >= 1");
  }

  const bool with_grads = grads != nullptr;
  std::vector<Eigen::MatrixXd> w2_samples;
  std::vector<std::vector<Eigen::VectorXd>> zetas;
  for (int l = 0; l < settings.theta_samples; ++l) {
    Rng rng = Rng::stream(settings.noise_seed, 200 + static_cast<std::uint64_t>(l));
    std::vector<Eigen::VectorXd> zeta;
    w2_samples.push_back(sample_theta(q, rng, &zeta));
    zetas.push_back(std::move(zeta));
  }

  Graph g = build_loglik_graph(spec, first, w2_samples, params, batch, settings,
                               with_grads, /*w2_trainable=*/true);

  const double ll = g.tape.value(g.loglik)(0, 0);
  const double kl = kl_to_prior(q);
  const double n_over_m = static_cast<double>(dataset_size);

  ObjectiveValue v;
  v.ce_term = -ll;
  v.kl_term = kl;
  v.objective = n_over_m * ll - kl;
  v.batch_accuracy = accuracy_of(g.mean_probs, batch.labels);

  if (with_grads) {
    g.tape.backward(g.loglik);
    const KlGrad klg = kl_to_prior_grad(q);
    grads->d_mu.assign(static_cast<std::size_t>(q.classes),
                       Eigen::VectorXd::Zero(q.dim));
    grads->d_lower_strict.assign(static_cast<std::size_t>(q.classes),
                                 Eigen::MatrixXd::Zero(q.dim, q.dim));
    grads->d_log_diag.assign(static_cast<std::size_t>(q.classes),
                             Eigen::VectorXd::Zero(q.dim));
    for (int l = 0; l < settings.theta_samples; ++l) {
      const Eigen::MatrixXd& gw2 = g.tape.grad(g.w2_leaves[static_cast<std::size_t>(l)]);
      for (int c = 0; c < q.classes; ++c) {
        const Eigen::VectorXd grow = n_over_m * gw2.row(c).transpose();
        grads->d_mu[static_cast<std::size_t>(c)] += grow;
        // w_c = mu_c + L_c^T zeta_c  =>  d/dL = zeta grow^T on the factor
        const Eigen::VectorXd& zeta = zetas[static_cast<std::size_t>(l)]
                                           [static_cast<std::size_t>(c)];
        Eigen::MatrixXd dl = zeta * grow.transpose();
        grads->d_lower_strict[static_cast<std::size_t>(c)] +=
            Eigen::MatrixXd(dl.triangularView<Eigen::StrictlyLower>());
        // diagonal entries are exp-parameterized
        const Eigen::ArrayXd diag =
            q.log_diag[static_cast<std::size_t>(c)].array().exp();
        grads->d_log_diag[static_cast<std::size_t>(c)] +=
            (dl.diagonal().array() * diag).matrix();
      }
    }
    for (int c = 0; c < q.classes; ++c) {
      grads->d_mu[static_cast<std::size_t>(c)] -= klg.d_mu[static_cast<std::size_t>(c)];
      grads->d_lower_strict[static_cast<std::size_t>(c)] -=
          klg.d_lower_strict[static_cast<std::size_t>(c)];
      grads->d_log_diag[static_cast<std::size_t>(c)] -=
          klg.d_log_diag[static_cast<std::size_t>(c)];
    }
    grads->d_eta = params.active_count() > 0
                       ? Vec6(n_over_m * masked_eta_grad(g.tape.grad(g.eta_leaf), params))
                       : Vec6::Zero();
    grads->d_w1 = first.trainable ? Eigen::MatrixXd(n_over_m * g.tape.grad(g.w1_leaf))
                                  : Eigen::MatrixXd();
    grads->d_w2.resize(0, 0);
  }
  return v;
}

ObjectiveValue point_estimate_objective(const ModelSpec& spec, const FirstLayer& first,
                                        const Eigen::MatrixXd& w2,
                                        const InvarianceParams& params,
                                        const Batch& batch,
                                        const ObjectiveSettings& settings,
                                        ObjectiveGrads* grads) {
  if (w2.rows() != spec.classes || w2.cols() != spec.hidden) {
    throw std::invalid_argument("point_estimate_objective: W2 shape mismatch");
  }
  const bool with_grads = grads != nullptr;
  std::vector<Eigen::MatrixXd> w2_samples{w2};
  Graph g = build_loglik_graph(spec, first, w2_samples, params, batch, settings,
                               with_grads, /*w2_trainable=*/true);
  const double ll = g.tape.value(g.loglik)(0, 0);

  ObjectiveValue v;
  v.objective = ll;
  v.ce_term = -ll;
  v.kl_term = 0.0;
  v.batch_accuracy = accuracy_of(g.mean_probs, batch.labels);

  if (with_grads) {
    g.tape.backward(g.loglik);
    grads->d_w2 = g.tape.grad(g.w2_leaves[0]);
    grads->d_eta = params.active_count() > 0
                       ? masked_eta_grad(g.tape.grad(g.eta_leaf), params)
                       : Vec6::Zero();
    grads->d_w1 = first.trainable ? g.tape.grad(g.w1_leaf) : Eigen::MatrixXd();
    grads->d_mu.clear();
    grads->d_lower_strict.clear();
    grads->d_log_diag.clear();
  }
  return v;
}

}  // namespace ivw
