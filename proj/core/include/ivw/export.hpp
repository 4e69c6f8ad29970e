#pragma once

#include <Eigen/Dense>
#include <string>

namespace ivw {

// 8-bit binary PGM ("P5"). values must lie in [0, 255].
void write_pgm(const std::string& path, const Eigen::MatrixXd& values);

// Lays the first `count` rows of W1 (pixel-column layout, one filter per
// row) out on a grid, each filter min-max normalized to 0..255 on its own,
// with 1-pixel white separators. count <= 0 means all rows.
Eigen::MatrixXd filter_montage(const Eigen::MatrixXd& w1, int height, int width,
                               int count = 0, int columns = 8);

}  // namespace ivw
