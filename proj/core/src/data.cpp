#include "ivw/data.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ivw/rng.hpp"
#include "ivw/warp.hpp"

namespace ivw {

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw FormatError("dataset: label count does not match example count");
  }
  if (classes < 1) throw FormatError("dataset: class count not set");
  for (int y : labels) {
    if (y < 0 || y >= classes) throw FormatError("dataset: label out of range");
  }
  const int d = height > 0 ? height * width : width;
  if (x.rows() != d) throw FormatError("dataset: dimensionality mismatch");
}

Dataset Dataset::subset(int offset, int count) const {
  if (offset < 0 || count < 0 || offset + count > size()) {
    throw std::invalid_argument("Dataset::subset: range out of bounds");
  }
  Dataset out;
  out.x = x.middleCols(offset, count);
  out.labels.assign(labels.begin() + offset, labels.begin() + offset + count);
  out.height = height;
  out.width = width;
  out.classes = classes;
  out.provenance = provenance + "[" + std::to_string(offset) + ":" +
                   std::to_string(offset + count) + "]";
  return out;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) {
    throw FormatError("idx: truncated header in " + path + " at byte " +
                      std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Eigen::MatrixXd load_idx_images(const std::string& path, int* height, int* width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("idx: cannot open " + path);
  const std::uint32_t magic = read_u32_be(in, path, 0);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << "idx: bad image magic 0x" << std::hex << magic << " in " << path
        << " at byte 0";
    throw FormatError(msg.str());
  }
  const std::uint32_t n = read_u32_be(in, path, 4);
  const std::uint32_t h = read_u32_be(in, path, 8);
  const std::uint32_t w = read_u32_be(in, path, 12);
  std::vector<unsigned char> buf(static_cast<std::size_t>(n) * h * w);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw FormatError("idx: truncated pixel data in " + path + " at byte " +
                      std::to_string(16 + in.gcount()));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(h) * w, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t p = 0; p < h * w; ++p) {
      x(p, i) = buf[static_cast<std::size_t>(i) * h * w + p] / 255.0;
    }
  }
  if (height) *height = static_cast<int>(h);
  if (width) *width = static_cast<int>(w);
  return x;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("idx: cannot open " + path);
  const std::uint32_t magic = read_u32_be(in, path, 0);
  if (magic != 0x00000801u) {
    std::ostringstream msg;
    msg << "idx: bad label magic 0x" << std::hex << magic << " in " << path
        << " at byte 0";
    throw FormatError(msg.str());
  }
  const std::uint32_t n = read_u32_be(in, path, 4);
  std::vector<unsigned char> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw FormatError("idx: truncated label data in " + path + " at byte " +
                      std::to_string(8 + in.gcount()));
  }
  return std::vector<int>(buf.begin(), buf.end());
}

void write_idx_images(const std::string& path, const Eigen::MatrixXd& x,
                      int height, int width) {
  if (x.rows() != static_cast<Eigen::Index>(height) * width) {
    throw std::invalid_argument("write_idx_images: shape mismatch");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("idx: cannot write " + path);
  write_u32_be(out, 0x00000803u);
  write_u32_be(out, static_cast<std::uint32_t>(x.cols()));
  write_u32_be(out, static_cast<std::uint32_t>(height));
  write_u32_be(out, static_cast<std::uint32_t>(width));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index p = 0; p < x.rows(); ++p) {
      const double v = std::min(1.0, std::max(0.0, x(p, i)));
      const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("idx: cannot write " + path);
  write_u32_be(out, 0x00000801u);
  write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (int y : labels) {
    const unsigned char b = static_cast<unsigned char>(y);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  Dataset d;
  d.x = load_idx_images(images_path, &d.height, &d.width);
  d.labels = load_idx_labels(labels_path);
  d.classes = 10;
  d.provenance = "mnist:" + images_path;
  d.validate();
  return d;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  constexpr int kRecord = 3073;
  constexpr int kPixels = 1024;  // per channel, 32x32
  Dataset d;
  d.height = 32;
  d.width = 32;
  d.classes = 10;
  std::vector<std::vector<unsigned char>> records;
  for (const std::string& path : batch_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cifar10: cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    if (len % kRecord != 0) {
      throw FormatError("cifar10: file length " + std::to_string(len) + " of " + path +
                        " is not a multiple of " + std::to_string(kRecord));
    }
    in.seekg(0);
    for (std::streamoff r = 0; r < len / kRecord; ++r) {
      std::vector<unsigned char> rec(kRecord);
      in.read(reinterpret_cast<char*>(rec.data()), kRecord);
      if (!in) throw FormatError("cifar10: truncated record in " + path);
      records.push_back(std::move(rec));
    }
  }
  d.x.resize(kPixels, static_cast<Eigen::Index>(records.size()));
  d.labels.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    d.labels[i] = rec[0];
    for (int p = 0; p < kPixels; ++p) {
      const double gray = (rec[1 + p] + rec[1 + kPixels + p] + rec[1 + 2 * kPixels + p]) /
                          (3.0 * 255.0);
      d.x(p, static_cast<Eigen::Index>(i)) = gray;
    }
  }
  d.provenance = "cifar10";
  d.validate();
  return d;
}

TransformKind parse_transform_kind(const std::string& name) {
  if (name == "rotate_full") return TransformKind::RotateFull;
  if (name == "rotate_partial") return TransformKind::RotatePartial;
  if (name == "translate") return TransformKind::Translate;
  if (name == "scale") return TransformKind::Scale;
  throw std::invalid_argument(
      "unknown transform kind '" + name +
      "' (expected rotate_full, rotate_partial, translate or scale)");
}

std::string transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::RotateFull: return "rotate_full";
    case TransformKind::RotatePartial: return "rotate_partial";
    case TransformKind::Translate: return "translate";
    case TransformKind::Scale: return "scale";
  }
  return "?";
}

Dataset make_transformed(const Dataset& base, const std::vector<TransformKind>& kinds,
                         std::uint64_t seed, bool zero_draws) {
  base.validate();
  if (!base.image_mode()) {
    throw std::invalid_argument("make_transformed: image datasets only");
  }
  if (kinds.empty()) {
    throw std::invalid_argument("make_transformed: no transform kinds given");
  }
  Dataset out = base;
  std::string desc;
  for (const TransformKind k : kinds) {
    desc += (desc.empty() ? "" : "+") + transform_kind_name(k);
  }
  out.provenance = base.provenance + "|" + desc + "@" + std::to_string(seed);

  const int h = base.height;
  const int w = base.width;
  for (int i = 0; i < base.size(); ++i) {
    // per-image stream so construction order (or parallelism) cannot
    // change the draws
    Rng rng = Rng::stream(seed, 1000 + static_cast<std::uint64_t>(i));
    Eigen::Matrix3d motion = Eigen::Matrix3d::Identity();
    for (const TransformKind k : kinds) {
      Vec6 eta = Vec6::Zero();
      switch (k) {
        case TransformKind::RotateFull:
          eta[2] = rng.uniform(-M_PI, M_PI);
          break;
        case TransformKind::RotatePartial:
          eta[2] = rng.uniform(-M_PI / 2, M_PI / 2);
          break;
        case TransformKind::Translate: {
          const double dx = rng.uniform(-8.0, 8.0);
          const double dy = rng.uniform(-8.0, 8.0);
          eta[0] = 2.0 * dx / (w - 1);
          eta[1] = 2.0 * dy / (h - 1);
          break;
        }
        case TransformKind::Scale: {
          const double s = rng.uniform(-std::log(2.0), std::log(2.0));
          eta[3] = s;
          eta[4] = s;
          break;
        }
      }
      if (zero_draws) eta.setZero();
      motion = motion * exp_affine(eta, Vec6::Ones()).matrix;
    }
    // sample with the inverse so image content moves by the drawn motion;
    // one resampling pass regardless of how many kinds are composed
    AffineTransform sampler;
    sampler.matrix = motion.inverse();
    WarpPlan plan(h, w, sampler.matrix);
    Eigen::MatrixXd img = base.x.col(i).transpose();  // 1 x H*W, pixel columns
    Eigen::MatrixXd warped;
    plan.apply(img, warped);
    out.x.col(i) = warped.transpose();
  }
  return out;
}

Dataset make_toy(std::uint64_t seed) {
  constexpr int kPerClass = 100;
  constexpr double kSigma = 0.2;
  Dataset d;
  d.height = 0;
  d.width = 2;
  d.classes = 2;
  d.x.resize(2, 2 * kPerClass);
  d.labels.resize(2 * kPerClass);
  d.provenance = "toy@" + std::to_string(seed);
  int n = 0;
  for (int c = 0; c < 2; ++c) {
    const double cx = c == 0 ? 1.0 : -1.0;
    Rng rng = Rng::stream(seed, 500 + static_cast<std::uint64_t>(c));
    for (int i = 0; i < kPerClass; ++i) {
      double px, py;
      do {
        px = cx + kSigma * rng.gaussian();
        py = 0.0 + kSigma * rng.gaussian();
      } while (std::abs(px) > 2.0 || std::abs(py) > 2.0);
      d.x(0, n) = px;
      d.x(1, n) = py;
      d.labels[static_cast<std::size_t>(n)] = c;
      ++n;
    }
  }
  return d;
}

namespace {

// 5x7 bitmap glyphs for 0..9
const std::array<std::array<const char*, 7>, 10> kGlyphs = {{
    {{" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "}},
    {{"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
    {{" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"}},
    {{"#####", "   # ", "  #  ", "   # ", "    #", "#   #", " ### "}},
    {{"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "}},
    {{"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "}},
    {{"  ## ", " #   ", "#    ", "#### ", "#   #", "#   #", " ### "}},
    {{"#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "}},
    {{" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "}},
    {{" ### ", "#   #", "#   #", " ####", "    #", "   # ", " ##  "}},
}};

Eigen::MatrixXd glyph_canvas(int digit) {
  constexpr int kSize = 28;
  constexpr int kScale = 3;
  constexpr int kRow0 = 3, kCol0 = 6;  // centers the 15x21 glyph
  Eigen::MatrixXd canvas = Eigen::MatrixXd::Zero(1, kSize * kSize);
  const auto& glyph = kGlyphs[static_cast<std::size_t>(digit)];
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      const int gr = (r - kRow0) / kScale;
      const int gc = (c - kCol0) / kScale;
      if (r >= kRow0 && c >= kCol0 && gr < 7 && gc < 5 &&
          glyph[static_cast<std::size_t>(gr)][gc] == '#') {
        canvas(0, r * kSize + c) = 1.0;
      }
    }
  }
  return canvas;
}

}  // namespace

Dataset make_digits(std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("make_digits: count must be >= 1");
  constexpr int kSize = 28;
  Dataset d;
  d.height = kSize;
  d.width = kSize;
  d.classes = 10;
  d.x.resize(kSize * kSize, count);
  d.labels.resize(static_cast<std::size_t>(count));
  d.provenance = "digits@" + std::to_string(seed);

  std::array<Eigen::MatrixXd, 10> canvases;
  for (int c = 0; c < 10; ++c) canvases[static_cast<std::size_t>(c)] = glyph_canvas(c);
  const BlurPlan blur(kSize, kSize, 0.6);

  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, 2000 + static_cast<std::uint64_t>(i));
    const int digit = static_cast<int>(rng.below(10));
    d.labels[static_cast<std::size_t>(i)] = digit;
    // small writing-style jitter: sub-glyph translation, anisotropic scale,
    // shear and a slight tilt
    Vec6 eta;
    eta[0] = rng.uniform(-2.0, 2.0) * 2.0 / (kSize - 1);
    eta[1] = rng.uniform(-2.0, 2.0) * 2.0 / (kSize - 1);
    eta[2] = rng.uniform(-0.06, 0.06);
    eta[3] = rng.uniform(-0.13, 0.13);
    eta[4] = rng.uniform(-0.13, 0.13);
    eta[5] = rng.uniform(-0.12, 0.12);
    WarpPlan plan(kSize, kSize, exp_affine(eta, Vec6::Ones()).matrix);
    Eigen::MatrixXd warped, smoothed;
    plan.apply(canvases[static_cast<std::size_t>(digit)], warped);
    blur.apply(warped, smoothed);
    const double peak = smoothed.maxCoeff();
    if (peak > 0.0) smoothed /= peak;
    d.x.col(i) = smoothed.transpose();
  }
  return d;
}

void save_dataset_cache(const std::string& path, const Dataset& dataset) {
  dataset.validate();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("ivds: cannot write " + tmp);
    out.write("IVDS", 4);
    auto write_u32 = [&](std::uint32_t v) {
      out.write(reinterpret_cast<const char*>(&v), 4);  // little-endian host
    };
    write_u32(1u);
    write_u32(static_cast<std::uint32_t>(dataset.size()));
    write_u32(static_cast<std::uint32_t>(dataset.height));
    write_u32(static_cast<std::uint32_t>(dataset.width));
    write_u32(static_cast<std::uint32_t>(dataset.classes));
    for (Eigen::Index i = 0; i < dataset.x.cols(); ++i) {
      for (Eigen::Index p = 0; p < dataset.x.rows(); ++p) {
        const float f = static_cast<float>(dataset.x(p, i));
        out.write(reinterpret_cast<const char*>(&f), 4);
      }
    }
    for (int y : dataset.labels) {
      const unsigned char b = static_cast<unsigned char>(y);
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!out) throw FormatError("ivds: write failure on " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("ivds: cannot rename " + tmp + " to " + path);
  }
}

Dataset load_dataset_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("ivds: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IVDS", 4) != 0) {
    throw FormatError("ivds: bad magic in " + path);
  }
  auto read_u32 = [&](const char* what) {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError(std::string("ivds: truncated ") + what + " in " + path);
    return v;
  };
  const std::uint32_t version = read_u32("version");
  if (version != 1u) {
    throw FormatError("ivds: unsupported version " + std::to_string(version));
  }
  Dataset d;
  const std::uint32_t n = read_u32("count");
  d.height = static_cast<int>(read_u32("height"));
  d.width = static_cast<int>(read_u32("width"));
  d.classes = static_cast<int>(read_u32("classes"));
  const Eigen::Index dim = d.height > 0 ? static_cast<Eigen::Index>(d.height) * d.width
                                        : d.width;
  d.x.resize(dim, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < dim; ++p) {
      float f;
      in.read(reinterpret_cast<char*>(&f), 4);
      if (!in) throw FormatError("ivds: truncated pixel data in " + path);
      d.x(p, i) = f;
    }
  }
  d.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    unsigned char b;
    in.read(reinterpret_cast<char*>(&b), 1);
    if (!in) throw FormatError("ivds: truncated labels in " + path);
    d.labels[i] = b;
  }
  d.provenance = path;
  d.validate();
  return d;
}

}  // namespace ivw
