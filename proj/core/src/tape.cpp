#include "ivw/tape.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ivw {

Tape::Id Tape::push(Eigen::MatrixXd value, bool requires_grad,
                    std::function<void(Tape&)> fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Node& Tape::node(Id id) {
  if (id < 0 || id >= static_cast<Id>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid node id");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::node(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid node id");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

void Tape::add_grad(Id id, const Eigen::MatrixXd& g) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  n.grad += g;
}

const Eigen::MatrixXd& Tape::value(Id id) const { return node(id).value; }

const Eigen::MatrixXd& Tape::grad(Id id) const {
  const Node& n = node(id);
  if (!n.requires_grad) {
    throw std::logic_error("tape: grad() on a node that does not require gradients");
  }
  if (n.grad.size() == 0) {
    throw std::logic_error("tape: grad() before backward()");
  }
  return n.grad;
}

void Tape::check_shape(Id id, const char* op, Eigen::Index rows, Eigen::Index cols) const {
  const auto& v = node(id).value;
  if (v.rows() != rows || v.cols() != cols) {
    std::ostringstream msg;
    msg << op << ": node " << id << " has shape " << v.rows() << "x" << v.cols()
        << ", expected " << rows << "x" << cols;
    throw std::invalid_argument(msg.str());
  }
}

Tape::Id Tape::leaf(const Eigen::MatrixXd& value, bool requires_grad) {
  return push(value, requires_grad, nullptr);
}

Tape::Id Tape::matmul(Id a, Id b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.cols() != vb.rows()) {
    std::ostringstream msg;
    msg << "matmul: inner dimensions disagree (" << va.rows() << "x" << va.cols()
        << " vs " << vb.rows() << "x" << vb.cols() << ") at nodes " << a << "," << b;
    throw std::invalid_argument(msg.str());
  }
  const bool rg = needs(a) || needs(b);
  Id out = push(va * vb, rg, nullptr);
  if (rg) {
    node(out).backward = [a, b, out](Tape& t) {
      const auto& g = t.node(out).grad;
      if (t.needs(a)) t.node(a).grad.noalias() += g * t.value(b).transpose();
      if (t.needs(b)) t.node(b).grad.noalias() += t.value(a).transpose() * g;
    };
  }
  return out;
}

Tape::Id Tape::add(Id a, Id b) {
  check_shape(b, "add", value(a).rows(), value(a).cols());
  const bool rg = needs(a) || needs(b);
  Id out = push(value(a) + value(b), rg, nullptr);
  if (rg) {
    node(out).backward = [a, b, out](Tape& t) {
      const auto& g = t.node(out).grad;
      t.add_grad(a, g);
      t.add_grad(b, g);
    };
  }
  return out;
}

Tape::Id Tape::scale(Id a, double s) {
  const bool rg = needs(a);
  Id out = push(value(a) * s, rg, nullptr);
  if (rg) {
    node(out).backward = [a, s, out](Tape& t) {
      t.node(a).grad.noalias() += s * t.node(out).grad;
    };
  }
  return out;
}

Tape::Id Tape::add_colvec(Id a, Id vec) {
  check_shape(vec, "add_colvec", value(a).rows(), 1);
  const bool rg = needs(a) || needs(vec);
  Id out = push(value(a).colwise() + Eigen::VectorXd(value(vec).col(0)), rg, nullptr);
  if (rg) {
    node(out).backward = [a, vec, out](Tape& t) {
      const auto& g = t.node(out).grad;
      t.add_grad(a, g);
      if (t.needs(vec)) t.node(vec).grad.noalias() += g.rowwise().sum();
    };
  }
  return out;
}

Tape::Id Tape::cos_scaled(Id a, double s) {
  // copy before push: value() references die if the node vector reallocates
  const Eigen::MatrixXd va = value(a);
  const bool rg = needs(a);
  Id out = push(s * va.array().cos().matrix(), rg, nullptr);
  if (rg) {
    // cache the local derivative; a is never mutated but sin() is not free
    Eigen::MatrixXd deriv = (-s) * va.array().sin().matrix();
    node(out).backward = [a, out, deriv = std::move(deriv)](Tape& t) {
      t.node(a).grad.noalias() += deriv.cwiseProduct(t.node(out).grad);
    };
  }
  return out;
}

Tape::Id Tape::relu(Id a) {
  const bool rg = needs(a);
  Id out = push(value(a).cwiseMax(0.0), rg, nullptr);
  if (rg) {
    node(out).backward = [a, out](Tape& t) {
      const auto& va = t.value(a);
      t.node(a).grad.noalias() +=
          (va.array() > 0.0).cast<double>().matrix().cwiseProduct(t.node(out).grad);
    };
  }
  return out;
}

Tape::Id Tape::softmax_cols(Id a) {
  const auto& va = value(a);
  Eigen::MatrixXd p(va.rows(), va.cols());
  for (Eigen::Index j = 0; j < va.cols(); ++j) {
    Eigen::ArrayXd col = va.col(j).array() - va.col(j).maxCoeff();
    Eigen::ArrayXd e = col.exp();
    p.col(j) = e / e.sum();
  }
  const bool rg = needs(a);
  Id out = push(std::move(p), rg, nullptr);
  if (rg) {
    node(out).backward = [a, out](Tape& t) {
      const auto& pv = t.value(out);
      const auto& g = t.node(out).grad;
      auto& ga = t.node(a).grad;
      for (Eigen::Index j = 0; j < pv.cols(); ++j) {
        const double dot = g.col(j).dot(pv.col(j));
        ga.col(j).noalias() +=
            pv.col(j).cwiseProduct(g.col(j) - Eigen::VectorXd::Constant(pv.rows(), dot));
      }
    };
  }
  return out;
}

Tape::Id Tape::mean_nodes(std::span<const Id> ids) {
  if (ids.empty()) throw std::invalid_argument("mean_nodes: empty list");
  Eigen::MatrixXd sum = value(ids[0]);
  bool rg = needs(ids[0]);
  for (std::size_t i = 1; i < ids.size(); ++i) {
    check_shape(ids[i], "mean_nodes", sum.rows(), sum.cols());
    sum += value(ids[i]);
    rg = rg || needs(ids[i]);
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  Id out = push(sum * inv, rg, nullptr);
  if (rg) {
    std::vector<Id> parents(ids.begin(), ids.end());
    node(out).backward = [parents = std::move(parents), inv, out](Tape& t) {
      const Eigen::MatrixXd g = inv * t.node(out).grad;
      for (Id p : parents) t.add_grad(p, g);
    };
  }
  return out;
}

Tape::Id Tape::log_picked_mean(Id probs, const std::vector<int>& labels) {
  const auto& p = value(probs);
  if (static_cast<Eigen::Index>(labels.size()) != p.cols()) {
    throw std::invalid_argument("log_picked_mean: label count must match columns");
  }
  const double inv = 1.0 / static_cast<double>(labels.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= p.rows()) {
      throw std::invalid_argument("log_picked_mean: label out of range");
    }
    acc += std::log(std::max(p(y, j), 1e-300));
  }
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = acc * inv;
  const bool rg = needs(probs);
  Id out = push(std::move(v), rg, nullptr);
  if (rg) {
    node(out).backward = [probs, labels, inv, out](Tape& t) {
      const double g = t.node(out).grad(0, 0);
      const auto& pv = t.value(probs);
      auto& gp = t.node(probs).grad;
      for (Eigen::Index j = 0; j < pv.cols(); ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        gp(y, j) += g * inv / std::max(pv(y, j), 1e-300);
      }
    };
  }
  return out;
}

Tape::Id Tape::exp_affine(Id eta, const Vec6& epsilon) {
  check_shape(eta, "exp_affine", 6, 1);
  const Vec6 eta_v = value(eta).col(0);
  const bool rg = needs(eta);
  if (!rg) {
    return push(ivw::exp_affine(eta_v, epsilon).matrix, false, nullptr);
  }
  ExpAffineGrad eg = ivw::exp_affine_grad(eta_v, epsilon);
  Id out = push(eg.transform.matrix, true, nullptr);
  node(out).backward = [eta, out, jac = eg.d_eta](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ge = t.node(eta).grad;
    for (int i = 0; i < 6; ++i) {
      ge(i, 0) += g.cwiseProduct(jac[static_cast<std::size_t>(i)]).sum();
    }
  };
  return out;
}

Tape::Id Tape::warp_rows(Id filters, Id transform, int height, int width,
                         double blur_sigma) {
  check_shape(transform, "warp_rows", 3, 3);
  const auto& f = value(filters);
  if (f.cols() != static_cast<Eigen::Index>(height) * width) {
    std::ostringstream msg;
    msg << "warp_rows: filters node " << filters << " has " << f.cols()
        << " columns, expected " << height * width;
    throw std::invalid_argument(msg.str());
  }
  auto plan = std::make_shared<WarpPlan>(height, width,
                                         Eigen::Matrix3d(value(transform)));
  auto blur = std::make_shared<BlurPlan>(height, width, blur_sigma);
  Eigen::MatrixXd warped;
  plan->apply(f, warped);
  Eigen::MatrixXd blurred;
  blur->apply(warped, blurred);

  const bool rg = needs(filters) || needs(transform);
  Id out = push(std::move(blurred), rg, nullptr);
  if (rg) {
    node(out).backward = [filters, transform, out, plan, blur](Tape& t) {
      // the Gaussian kernel is symmetric, so blur^T == blur
      Eigen::MatrixXd d_warped;
      blur->apply(t.node(out).grad, d_warped);
      if (t.needs(filters)) {
        Eigen::MatrixXd d_f;
        plan->apply_transpose(d_warped, d_f);
        t.node(filters).grad.noalias() += d_f;
      }
      if (t.needs(transform)) {
        Eigen::Matrix3d dt = Eigen::Matrix3d::Zero();
        plan->accumulate_matrix_grad(t.value(filters), d_warped, dt);
        t.node(transform).grad.noalias() += dt;
      }
    };
  }
  return out;
}

Tape::Id Tape::transform_points(Id points, Id transform) {
  check_shape(transform, "transform_points", 3, 3);
  const auto& p = value(points);
  if (p.rows() != 2) {
    throw std::invalid_argument("transform_points: points must be 2 x N");
  }
  const auto& m = value(transform);
  Eigen::MatrixXd out_v(2, p.cols());
  out_v.row(0) = m(0, 0) * p.row(0) + m(0, 1) * p.row(1) +
                 Eigen::RowVectorXd::Constant(p.cols(), m(0, 2));
  out_v.row(1) = m(1, 0) * p.row(0) + m(1, 1) * p.row(1) +
                 Eigen::RowVectorXd::Constant(p.cols(), m(1, 2));
  const bool rg = needs(points) || needs(transform);
  Id out = push(std::move(out_v), rg, nullptr);
  if (rg) {
    node(out).backward = [points, transform, out](Tape& t) {
      const auto& g = t.node(out).grad;
      const auto& m = t.value(transform);
      const auto& p = t.value(points);
      if (t.needs(points)) {
        auto& gp = t.node(points).grad;
        gp.row(0).noalias() += m(0, 0) * g.row(0) + m(1, 0) * g.row(1);
        gp.row(1).noalias() += m(0, 1) * g.row(0) + m(1, 1) * g.row(1);
      }
      if (t.needs(transform)) {
        auto& gm = t.node(transform).grad;
        gm(0, 0) += g.row(0).dot(p.row(0));
        gm(0, 1) += g.row(0).dot(p.row(1));
        gm(0, 2) += g.row(0).sum();
        gm(1, 0) += g.row(1).dot(p.row(0));
        gm(1, 1) += g.row(1).dot(p.row(1));
        gm(1, 2) += g.row(1).sum();
      }
    };
  }
  return out;
}

void Tape::backward(Id loss) {
  if (nodes_.empty()) {
    throw std::logic_error("tape: backward() before any forward computation");
  }
  const Node& l = node(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw std::invalid_argument("tape: backward() target must be a 1x1 node");
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  }
  if (!l.requires_grad) return;  // loss does not depend on any trainable leaf
  node(loss).grad(0, 0) = 1.0;
  for (Id i = loss; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.requires_grad) n.backward(*this);
  }
}

}  // namespace ivw
