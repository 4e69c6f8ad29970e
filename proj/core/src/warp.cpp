#include "ivw/warp.hpp"

#include <cmath>
#include <stdexcept>

namespace ivw {

namespace {

Eigen::MatrixXd flatten_row_major(const Eigen::MatrixXd& grid) {
  const int h = static_cast<int>(grid.rows());
  const int w = static_cast<int>(grid.cols());
  Eigen::MatrixXd flat(1, h * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) flat(0, r * w + c) = grid(r, c);
  return flat;
}

Eigen::MatrixXd unflatten_row_major(const Eigen::MatrixXd& flat, int h, int w) {
  Eigen::MatrixXd grid(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) grid(r, c) = flat(0, r * w + c);
  return grid;
}

}  // namespace

WarpPlan::WarpPlan(int height, int width, const Eigen::Matrix3d& t)
    : h_(height), w_(width) {
  if (height < 2 || width < 2) {
    throw std::invalid_argument("WarpPlan: grid must be at least 2x2");
  }
  pix_.resize(static_cast<std::size_t>(h_) * w_);
  const double sx = (w_ - 1) / 2.0;  // d(continuous column)/d(qx)
  const double sy = (h_ - 1) / 2.0;
  for (int r = 0; r < h_; ++r) {
    const double y = -1.0 + 2.0 * r / (h_ - 1);
    for (int c = 0; c < w_; ++c) {
      const double x = -1.0 + 2.0 * c / (w_ - 1);
      Pix& p = pix_[static_cast<std::size_t>(r) * w_ + c];
      p.x = x;
      p.y = y;
      const double qx = t(0, 0) * x + t(0, 1) * y + t(0, 2);
      const double qy = t(1, 0) * x + t(1, 1) * y + t(1, 2);
      const double u = (qx + 1.0) * sx;  // continuous column
      const double v = (qy + 1.0) * sy;  // continuous row
      const double fc = std::floor(u);
      const double fr = std::floor(v);
      const int c0 = static_cast<int>(fc);
      const int r0 = static_cast<int>(fr);
      const double fu = u - fc;
      const double fv = v - fr;

      const int rows[4] = {r0, r0, r0 + 1, r0 + 1};
      const int cols[4] = {c0, c0 + 1, c0, c0 + 1};
      const double w4[4] = {(1 - fv) * (1 - fu), (1 - fv) * fu,
                            fv * (1 - fu), fv * fu};
      const double du4[4] = {-(1 - fv), (1 - fv), -fv, fv};
      const double dv4[4] = {-(1 - fu), -fu, (1 - fu), fu};
      for (int k = 0; k < 4; ++k) {
        const bool inside = rows[k] >= 0 && rows[k] < h_ && cols[k] >= 0 && cols[k] < w_;
        p.idx[k] = inside ? rows[k] * w_ + cols[k] : -1;
        p.wgt[k] = inside ? w4[k] : 0.0;
        p.dwx[k] = inside ? du4[k] * sx : 0.0;
        p.dwy[k] = inside ? dv4[k] * sy : 0.0;
      }
    }
  }
}

void WarpPlan::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  out.setZero(in.rows(), in.cols());
  for (std::size_t p = 0; p < pix_.size(); ++p) {
    const Pix& px = pix_[p];
    auto col = out.col(static_cast<Eigen::Index>(p));
    for (int k = 0; k < 4; ++k) {
      if (px.idx[k] >= 0 && px.wgt[k] != 0.0) {
        col.noalias() += px.wgt[k] * in.col(px.idx[k]);
      }
    }
  }
}

void WarpPlan::apply_transpose(const Eigen::MatrixXd& dout, Eigen::MatrixXd& din) const {
  din.setZero(dout.rows(), dout.cols());
  for (std::size_t p = 0; p < pix_.size(); ++p) {
    const Pix& px = pix_[p];
    auto col = dout.col(static_cast<Eigen::Index>(p));
    for (int k = 0; k < 4; ++k) {
      if (px.idx[k] >= 0 && px.wgt[k] != 0.0) {
        din.col(px.idx[k]).noalias() += px.wgt[k] * col;
      }
    }
  }
}

void WarpPlan::accumulate_matrix_grad(const Eigen::MatrixXd& in,
                                      const Eigen::MatrixXd& dout,
                                      Eigen::Matrix3d& d_transform) const {
  for (std::size_t p = 0; p < pix_.size(); ++p) {
    const Pix& px = pix_[p];
    auto col = dout.col(static_cast<Eigen::Index>(p));
    double sx = 0.0, sy = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (px.idx[k] < 0) continue;
      const double dk = col.dot(in.col(px.idx[k]));
      sx += px.dwx[k] * dk;
      sy += px.dwy[k] * dk;
    }
    d_transform(0, 0) += sx * px.x;
    d_transform(0, 1) += sx * px.y;
    d_transform(0, 2) += sx;
    d_transform(1, 0) += sy * px.x;
    d_transform(1, 1) += sy * px.y;
    d_transform(1, 2) += sy;
  }
}

FilterGrid grid_sample_bilinear(const FilterGrid& filter, const AffineTransform& t) {
  const int h = filter.height();
  const int w = filter.width();
  WarpPlan plan(h, w, t.matrix);
  Eigen::MatrixXd flat = flatten_row_major(filter.values);
  Eigen::MatrixXd out;
  plan.apply(flat, out);
  return FilterGrid{unflatten_row_major(out, h, w)};
}

GridSampleGrad grid_sample_grad(const FilterGrid& filter, const AffineTransform& t) {
  const int h = filter.height();
  const int w = filter.width();
  auto plan = std::make_shared<WarpPlan>(h, w, t.matrix);
  Eigen::MatrixXd flat = flatten_row_major(filter.values);
  Eigen::MatrixXd out;
  plan->apply(flat, out);

  GridSampleGrad g;
  g.output = FilterGrid{unflatten_row_major(out, h, w)};
  g.d_filter = plan;
  g.d_matrix = Eigen::MatrixXd::Zero(h * w, 9);
  // per output pixel, one unit cotangent recovers that row of the Jacobian
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(1, h * w);
  for (int p = 0; p < h * w; ++p) {
    unit(0, p) = 1.0;
    Eigen::Matrix3d dt = Eigen::Matrix3d::Zero();
    plan->accumulate_matrix_grad(flat, unit, dt);
    unit(0, p) = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g.d_matrix(p, i * 3 + j) = dt(i, j);
  }
  return g;
}

BlurPlan::BlurPlan(int height, int width, double sigma) : h_(height), w_(width) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return;  // identity
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  kernel_.resize(static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int j = 0; j <= radius; ++j) {
    kernel_[static_cast<std::size_t>(j)] = std::exp(-0.5 * j * j / (sigma * sigma));
    sum += (j == 0 ? 1.0 : 2.0) * kernel_[static_cast<std::size_t>(j)];
  }
  for (auto& k : kernel_) k /= sum;
}

void BlurPlan::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  if (is_identity()) {
    out = in;
    return;
  }
  const int radius = static_cast<int>(kernel_.size()) - 1;
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(in.rows(), in.cols());
  // horizontal pass
  for (int r = 0; r < h_; ++r) {
    for (int c = 0; c < w_; ++c) {
      auto col = tmp.col(static_cast<Eigen::Index>(r) * w_ + c);
      for (int j = -radius; j <= radius; ++j) {
        const int cc = c + j;
        if (cc < 0 || cc >= w_) continue;
        col.noalias() += kernel_[static_cast<std::size_t>(std::abs(j))] *
                         in.col(static_cast<Eigen::Index>(r) * w_ + cc);
      }
    }
  }
  // vertical pass
  out.setZero(in.rows(), in.cols());
  for (int r = 0; r < h_; ++r) {
    for (int c = 0; c < w_; ++c) {
      auto col = out.col(static_cast<Eigen::Index>(r) * w_ + c);
      for (int j = -radius; j <= radius; ++j) {
        const int rr = r + j;
        if (rr < 0 || rr >= h_) continue;
        col.noalias() += kernel_[static_cast<std::size_t>(std::abs(j))] *
                         tmp.col(static_cast<Eigen::Index>(rr) * w_ + c);
      }
    }
  }
}

FilterGrid gaussian_blur(const FilterGrid& filter, double sigma) {
  const int h = filter.height();
  const int w = filter.width();
  BlurPlan plan(h, w, sigma);
  Eigen::MatrixXd flat = flatten_row_major(filter.values);
  Eigen::MatrixXd out;
  plan.apply(flat, out);
  return FilterGrid{unflatten_row_major(out, h, w)};
}

Eigen::MatrixXd transform_coordinates(const Eigen::MatrixXd& points,
                                      const AffineTransform& t) {
  if (points.cols() != 2) {
    throw std::invalid_argument("transform_coordinates: points must be N x 2");
  }
  Eigen::MatrixXd out(points.rows(), 2);
  out.col(0) = t.matrix(0, 0) * points.col(0) + t.matrix(0, 1) * points.col(1) +
               Eigen::VectorXd::Constant(points.rows(), t.matrix(0, 2));
  out.col(1) = t.matrix(1, 0) * points.col(0) + t.matrix(1, 1) * points.col(1) +
               Eigen::VectorXd::Constant(points.rows(), t.matrix(1, 2));
  return out;
}

}  // namespace ivw
