#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ivw/liegroup.hpp"

namespace ivw {

// Thrown for malformed dataset / checkpoint files; carries the byte offset
// where parsing failed when known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Images are flattened row-major (p = r*W + c) into columns of x; pixel
// values live in [0,1]. Coordinate datasets use height == 0 and width == 2.
struct Dataset {
  Eigen::MatrixXd x;        // D x N
  std::vector<int> labels;  // N, in [0, classes)
  int height = 0;
  int width = 0;
  int classes = 0;
  std::string provenance;

  int size() const { return static_cast<int>(x.cols()); }
  bool image_mode() const { return height > 0; }
  void validate() const;
  Dataset subset(int offset, int count) const;
};

// --- IDX (big-endian MNIST distribution format) ---

// magic 0x00000803, u8 pixels rescaled to [0,1]; returns D x N with D = H*W
Eigen::MatrixXd load_idx_images(const std::string& path, int* height, int* width);
// magic 0x00000801
std::vector<int> load_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const Eigen::MatrixXd& x,
                      int height, int width);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

Dataset load_mnist(const std::string& images_path, const std::string& labels_path);

// --- CIFAR-10 binary (3073-byte records), grayscale by channel mean ---
Dataset load_cifar10(const std::vector<std::string>& batch_paths);

// --- transformed-dataset construction ---

enum class TransformKind { RotateFull, RotatePartial, Translate, Scale };

TransformKind parse_transform_kind(const std::string& name);  // invalid_argument
std::string transform_kind_name(TransformKind kind);

// Applies one independent parameter draw per image for each kind in order.
// Resampling uses the bilinear warp with zero padding; translations are
// drawn in pixels and converted to normalized units 2*dx/(W-1). zero_draws
// forces every drawn parameter to 0 (test hook).
Dataset make_transformed(const Dataset& base, const std::vector<TransformKind>& kinds,
                         std::uint64_t seed, bool zero_draws = false);

// Two Gaussian blobs at (+-1, 0), sigma 0.2, 100 points per class; points
// outside [-2,2]^2 are redrawn.
Dataset make_toy(std::uint64_t seed);

// Procedurally rendered digit glyphs (28x28, 10 classes) with random small
// affine jitter and blur. A stand-in for handwritten digits when no IDX
// files are available; fully deterministic in (seed, count).
Dataset make_digits(std::uint64_t seed, int count);

// --- dataset cache (IVDS): magic, u32 version, u32 N/H/W/C, f32 pixels,
// u8 labels, all little-endian ---
void save_dataset_cache(const std::string& path, const Dataset& dataset);
Dataset load_dataset_cache(const std::string& path);

}  // namespace ivw
