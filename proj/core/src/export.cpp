#include "ivw/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ivw {

void write_pgm(const std::string& path, const Eigen::MatrixXd& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_pgm: cannot write " + path);
  out << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::min(255.0, std::max(0.0, values(r, c)));
      const unsigned char b = static_cast<unsigned char>(std::lround(v));
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
}

Eigen::MatrixXd filter_montage(const Eigen::MatrixXd& w1, int height, int width,
                               int count, int columns) {
  if (w1.cols() != static_cast<Eigen::Index>(height) * width) {
    throw std::invalid_argument("filter_montage: filter size mismatch");
  }
  if (columns < 1) throw std::invalid_argument("filter_montage: columns must be >= 1");
  const int total = static_cast<int>(w1.rows());
  const int n = count > 0 ? std::min(count, total) : total;
  const int rows = (n + columns - 1) / columns;
  const int out_h = rows * height + (rows - 1);
  const int out_w = columns * width + (columns - 1);
  Eigen::MatrixXd canvas = Eigen::MatrixXd::Constant(out_h, out_w, 255.0);

  for (int i = 0; i < n; ++i) {
    const int gr = i / columns;
    const int gc = i % columns;
    const Eigen::RowVectorXd filt = w1.row(i);
    const double lo = filt.minCoeff();
    const double hi = filt.maxCoeff();
    const double span = hi - lo;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double v = filt(r * width + c);
        const double norm = span > 0.0 ? (v - lo) / span : 0.5;
        canvas(gr * (height + 1) + r, gc * (width + 1) + c) = 255.0 * norm;
      }
    }
  }
  return canvas;
}

}  // namespace ivw
