#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ivw/liegroup.hpp"
#include "ivw/warp.hpp"

namespace ivw {

// Reverse-mode differentiation over the fixed computation graph of this
// project. Nodes are appended eagerly (that is the forward pass, values are
// cached as they are computed) and backward() replays the recorded closures
// in strict reverse order.
//
// The primitives are coarse-grained (whole-matrix ops) on purpose: the
// architecture never changes shape during training, and big nodes keep the
// bookkeeping overhead negligible next to the matrix products.
class Tape {
 public:
  using Id = int;

  // Leaves. Gradients are only accumulated into nodes that (transitively)
  // require them.
  Id leaf(const Eigen::MatrixXd& value, bool requires_grad = false);

  const Eigen::MatrixXd& value(Id id) const;
  // valid after backward(); zero matrix for nodes not on a gradient path
  const Eigen::MatrixXd& grad(Id id) const;

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id scale(Id a, double s);
  // broadcast-add a column vector to every column
  Id add_colvec(Id a, Id vec);
  // s * cos(a), elementwise
  Id cos_scaled(Id a, double s);
  Id relu(Id a);
  // column-wise soft-argmax
  Id softmax_cols(Id a);
  // arithmetic mean of equally shaped nodes
  Id mean_nodes(std::span<const Id> ids);
  // 1x1 node: (1/M) * sum_i log probs(labels[i], i)
  Id log_picked_mean(Id probs, const std::vector<int>& labels);

  // 3x3 transform exp(sum_i eps_i * eta_i * G_i); eta is a 6x1 leaf
  Id exp_affine(Id eta, const Vec6& epsilon);
  // warp every row of `filters` (n x H*W, pixel-columns) by the 3x3
  // transform node, then apply a Gaussian blur of width blur_sigma
  Id warp_rows(Id filters, Id transform, int height, int width, double blur_sigma);
  // points: 2 x N node (one point per column); result 2 x N through the
  // 3x3 transform node, appending the homogeneous 1-entry
  Id transform_points(Id points, Id transform);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
  // 1x1. Throws std::logic_error if the tape is empty (no forward pass has
  // been recorded) and std::invalid_argument for a non-scalar node.
  void backward(Id loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;  // null for leaves
  };

  Id push(Eigen::MatrixXd value, bool requires_grad, std::function<void(Tape&)> fn);
  Node& node(Id id);
  const Node& node(Id id) const;
  void add_grad(Id id, const Eigen::MatrixXd& g);
  bool needs(Id id) const { return node(id).requires_grad; }
  void check_shape(Id id, const char* op, Eigen::Index rows, Eigen::Index cols) const;

  std::vector<Node> nodes_;
};

}  // namespace ivw
