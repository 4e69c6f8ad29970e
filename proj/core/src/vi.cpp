#include "ivw/vi.hpp"

#include <cmath>
#include <stdexcept>

namespace ivw {

VariationalPosterior VariationalPosterior::init(int classes, int dim, double alpha) {
  if (classes < 1 || dim < 1) {
    throw std::invalid_argument("VariationalPosterior: bad shape");
  }
  if (alpha <= 0.0) {
    throw std::invalid_argument("VariationalPosterior: prior variance must be positive");
  }
  VariationalPosterior q;
  q.classes = classes;
  q.dim = dim;
  q.prior_variance = alpha;
  q.mu.assign(static_cast<std::size_t>(classes), Eigen::VectorXd::Zero(dim));
  q.lower_strict.assign(static_cast<std::size_t>(classes),
                        Eigen::MatrixXd::Zero(dim, dim));
  q.log_diag.assign(static_cast<std::size_t>(classes), Eigen::VectorXd::Zero(dim));
  return q;
}

void VariationalPosterior::validate() const {
  if (prior_variance <= 0.0) {
    throw std::invalid_argument("VariationalPosterior: prior variance must be positive");
  }
  if (static_cast<int>(mu.size()) != classes ||
      static_cast<int>(lower_strict.size()) != classes ||
      static_cast<int>(log_diag.size()) != classes) {
    throw std::invalid_argument("VariationalPosterior: inconsistent class count");
  }
}

Eigen::MatrixXd VariationalPosterior::cholesky(int c) const {
  Eigen::MatrixXd l = lower_strict[static_cast<std::size_t>(c)]
                          .triangularView<Eigen::StrictlyLower>();
  l.diagonal() = log_diag[static_cast<std::size_t>(c)].array().exp();
  return l;
}

Eigen::MatrixXd VariationalPosterior::covariance(int c) const {
  Eigen::MatrixXd l = cholesky(c);
  return l.transpose() * l;
}

Eigen::MatrixXd VariationalPosterior::mean_weights() const {
  Eigen::MatrixXd w(classes, dim);
  for (int c = 0; c < classes; ++c) w.row(c) = mu[static_cast<std::size_t>(c)];
  return w;
}

Eigen::MatrixXd sample_theta(const VariationalPosterior& q, Rng& rng,
                             std::vector<Eigen::VectorXd>* zeta_out) {
  q.validate();
  Eigen::MatrixXd w2(q.classes, q.dim);
  if (zeta_out) zeta_out->clear();
  for (int c = 0; c < q.classes; ++c) {
    Eigen::VectorXd zeta(q.dim);
    for (int i = 0; i < q.dim; ++i) zeta[i] = rng.gaussian();
    const Eigen::MatrixXd l = q.cholesky(c);
    w2.row(c) = (q.mu[static_cast<std::size_t>(c)] + l.transpose() * zeta).transpose();
    if (zeta_out) zeta_out->push_back(std::move(zeta));
  }
  return w2;
}

std::vector<Eigen::MatrixXd> sample_theta(const VariationalPosterior& q,
                                          std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("sample_theta: count must be >= 1");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    Rng rng = Rng::stream(seed, 200 + static_cast<std::uint64_t>(l));
    out.push_back(sample_theta(q, rng));
  }
  return out;
}

double kl_to_prior(const VariationalPosterior& q) {
  q.validate();
  const double alpha = q.prior_variance;
  const double d = static_cast<double>(q.dim);
  double kl = 0.0;
  for (int c = 0; c < q.classes; ++c) {
    const Eigen::MatrixXd l = q.cholesky(c);
    const double mu_term = q.mu[static_cast<std::size_t>(c)].squaredNorm() / alpha;
    const double trace_term = l.squaredNorm() / alpha;  // tr(L^T L)
    const double logdet_q = 2.0 * q.log_diag[static_cast<std::size_t>(c)].sum();
    kl += 0.5 * (mu_term + trace_term - d + d * std::log(alpha) - logdet_q);
  }
  return kl;
}

KlGrad kl_to_prior_grad(const VariationalPosterior& q) {
  q.validate();
  const double alpha = q.prior_variance;
  KlGrad g;
  for (int c = 0; c < q.classes; ++c) {
    g.d_mu.push_back(q.mu[static_cast<std::size_t>(c)] / alpha);
    // d(0.5 |L|_F^2 / alpha)/dL = L / alpha on the free strict-lower entries
    Eigen::MatrixXd dls = q.lower_strict[static_cast<std::size_t>(c)]
                              .triangularView<Eigen::StrictlyLower>();
    g.d_lower_strict.push_back(dls / alpha);
    // diagonal via L_kk = exp(s_k): d/ds_k = L_kk^2/alpha - 1
    Eigen::ArrayXd diag = q.log_diag[static_cast<std::size_t>(c)].array().exp();
    g.d_log_diag.push_back((diag.square() / alpha - 1.0).matrix());
  }
  return g;
}

}  // namespace ivw
