#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "ivw/liegroup.hpp"

namespace ivw {

// One first-layer filter viewed as an H x W pixel grid.
struct FilterGrid {
  Eigen::MatrixXd values;  // H x W
  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
};

// Precomputed bilinear resampling stencil for one transform and one grid
// shape, reusable across any number of filters. Filters are stored with
// pixels as columns (hidden x H*W, pixel index p = r*W + c) so each stencil
// tap is a contiguous column operation.
//
// Conventions: corner-aligned normalized coordinates (pixel i in 0..W-1 maps
// to x = -1 + 2i/(W-1)), output(p) samples input at T*p, reads outside
// [-1,1]^2 are zero. On cell boundaries the one-sided derivative of the
// interpolant is used.
class WarpPlan {
 public:
  WarpPlan(int height, int width, const Eigen::Matrix3d& transform);

  // out = stencil applied to each row of `in` (both n x H*W)
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;
  // din = stencil^T applied to each row of `dout`
  void apply_transpose(const Eigen::MatrixXd& dout, Eigen::MatrixXd& din) const;
  // d(loss)/dT given the warped inputs and d(loss)/d(output); accumulates
  void accumulate_matrix_grad(const Eigen::MatrixXd& in, const Eigen::MatrixXd& dout,
                              Eigen::Matrix3d& d_transform) const;

  int height() const { return h_; }
  int width() const { return w_; }

 private:
  struct Pix {
    int idx[4];      // input pixel indices, -1 when outside the grid
    double wgt[4];   // bilinear weights
    double dwx[4];   // d wgt / d qx (normalized query x)
    double dwy[4];   // d wgt / d qy
    double x, y;     // normalized output coordinate (third entry is 1)
  };
  int h_, w_;
  std::vector<Pix> pix_;
};

FilterGrid grid_sample_bilinear(const FilterGrid& filter, const AffineTransform& t);

struct GridSampleGrad {
  FilterGrid output;
  std::shared_ptr<const WarpPlan> d_filter;  // exact linear map in the pixel values
  Eigen::MatrixXd d_matrix;                  // (H*W) x 9, row-major T layout
};

GridSampleGrad grid_sample_grad(const FilterGrid& filter, const AffineTransform& t);

// Separable Gaussian convolution, kernel truncated at radius
// max(1, ceil(3*sigma)) and renormalized to sum 1, zero-padded borders.
// sigma == 0 is the identity. Throws std::invalid_argument for sigma < 0.
FilterGrid gaussian_blur(const FilterGrid& filter, double sigma);

// Same blur acting on a stack of flattened filters (pixels as columns).
// The kernel is symmetric so the map equals its own transpose.
class BlurPlan {
 public:
  BlurPlan(int height, int width, double sigma);
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;
  bool is_identity() const { return kernel_.empty(); }

 private:
  int h_, w_;
  std::vector<double> kernel_;  // one side incl. center; empty => identity
};

// Each row (x1, x2) maps to the first two coordinates of T * (x1, x2, 1)^T.
Eigen::MatrixXd transform_coordinates(const Eigen::MatrixXd& points,
                                      const AffineTransform& t);

}  // namespace ivw
