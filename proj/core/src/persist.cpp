#include "ivw/persist.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace ivw {

namespace {

constexpr char kMagic[4] = {'I', 'V', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;
constexpr std::uint8_t kDtypeU64 = 1;

class RecordWriter {
 public:
  explicit RecordWriter(std::ostream& out) : out_(out) {}

  void matrix(const std::string& name, const Eigen::MatrixXd& m) {
    header(name, kDtypeF64, {static_cast<std::uint32_t>(m.rows()),
                             static_cast<std::uint32_t>(m.cols())});
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double v = m(r, c);
        out_.write(reinterpret_cast<const char*>(&v), 8);
      }
    }
  }

  void scalar(const std::string& name, double v) {
    header(name, kDtypeF64, {});
    out_.write(reinterpret_cast<const char*>(&v), 8);
  }

  void scalar_u64(const std::string& name, std::uint64_t v) {
    header(name, kDtypeU64, {});
    out_.write(reinterpret_cast<const char*>(&v), 8);
  }

 private:
  void header(const std::string& name, std::uint8_t dtype,
              std::initializer_list<std::uint32_t> dims) {
    const std::uint32_t len = static_cast<std::uint32_t>(name.size());
    out_.write(reinterpret_cast<const char*>(&len), 4);
    out_.write(name.data(), len);
    out_.write(reinterpret_cast<const char*>(&dtype), 1);
    const std::uint32_t rank = static_cast<std::uint32_t>(dims.size());
    out_.write(reinterpret_cast<const char*>(&rank), 4);
    for (std::uint32_t d : dims) out_.write(reinterpret_cast<const char*>(&d), 4);
  }

  std::ostream& out_;
};

struct Record {
  std::uint8_t dtype = kDtypeF64;
  Eigen::MatrixXd matrix;   // f64 payload (scalars are 1x1)
  std::uint64_t u64 = 0;
};

std::map<std::string, Record> read_records(std::istream& in, const std::string& path) {
  std::map<std::string, Record> records;
  while (true) {
    std::uint32_t len;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (in.eof()) break;
    if (!in || len > 4096) throw FormatError("ivnw: bad record name in " + path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint8_t dtype;
    std::uint32_t rank;
    in.read(reinterpret_cast<char*>(&dtype), 1);
    in.read(reinterpret_cast<char*>(&rank), 4);
    if (!in || rank > 2) {
      throw FormatError("ivnw: bad header for record '" + name + "' in " + path);
    }
    std::vector<std::uint32_t> dims(rank);
    for (std::uint32_t& d : dims) in.read(reinterpret_cast<char*>(&d), 4);
    Record rec;
    rec.dtype = dtype;
    if (dtype == kDtypeU64) {
      if (rank != 0) {
        throw FormatError("ivnw: u64 record '" + name + "' must be scalar in " + path);
      }
      in.read(reinterpret_cast<char*>(&rec.u64), 8);
    } else if (dtype == kDtypeF64) {
      const std::uint32_t rows = rank >= 1 ? dims[0] : 1;
      const std::uint32_t cols = rank >= 2 ? dims[1] : 1;
      rec.matrix.resize(rows, cols);
      for (std::uint32_t c = 0; c < cols; ++c) {
        for (std::uint32_t r = 0; r < rows; ++r) {
          double v;
          in.read(reinterpret_cast<char*>(&v), 8);
          rec.matrix(r, c) = v;
        }
      }
    } else {
      throw FormatError("ivnw: unknown dtype for record '" + name + "' in " + path);
    }
    if (!in) throw FormatError("ivnw: truncated record '" + name + "' in " + path);
    records.emplace(std::move(name), std::move(rec));
  }
  return records;
}

class RecordReader {
 public:
  RecordReader(std::map<std::string, Record> records, std::string path)
      : records_(std::move(records)), path_(std::move(path)) {}

  const Eigen::MatrixXd& matrix(const std::string& name) {
    const Record& rec = find(name);
    if (rec.dtype != kDtypeF64) {
      throw FormatError("ivnw: record '" + name + "' has wrong dtype in " + path_);
    }
    return rec.matrix;
  }

  double scalar(const std::string& name) {
    const Eigen::MatrixXd& m = matrix(name);
    if (m.size() != 1) {
      throw FormatError("ivnw: record '" + name + "' is not scalar in " + path_);
    }
    return m(0, 0);
  }

  std::uint64_t scalar_u64(const std::string& name) {
    const Record& rec = find(name);
    if (rec.dtype != kDtypeU64) {
      throw FormatError("ivnw: record '" + name + "' has wrong dtype in " + path_);
    }
    return rec.u64;
  }

  bool has(const std::string& name) const { return records_.count(name) != 0; }

  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, rec] : records_) {
      if (name.rfind(prefix, 0) == 0) out.push_back(name);
    }
    return out;
  }

 private:
  const Record& find(const std::string& name) {
    auto it = records_.find(name);
    if (it == records_.end()) {
      throw FormatError("ivnw: missing record '" + name + "' in " + path_);
    }
    return it->second;
  }

  std::map<std::string, Record> records_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("ivnw: cannot write " + tmp);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    RecordWriter w(out);

    w.scalar("spec.flavor", ckpt.spec.flavor == Flavor::RFF ? 0.0 : 1.0);
    w.scalar("spec.hidden", ckpt.spec.hidden);
    w.scalar("spec.image_mode", ckpt.spec.image_mode ? 1.0 : 0.0);
    w.scalar("spec.height", ckpt.spec.height);
    w.scalar("spec.width", ckpt.spec.width);
    w.scalar("spec.coord_dim", ckpt.spec.coord_dim);
    w.scalar("spec.classes", ckpt.spec.classes);
    w.scalar("spec.rff_lengthscale", ckpt.spec.rff_lengthscale);
    w.scalar("spec.blur_sigma", ckpt.spec.blur_sigma);

    w.matrix("first.w1", ckpt.first.W1);
    w.matrix("first.phase", ckpt.first.phase);
    w.scalar("first.trainable", ckpt.first.trainable ? 1.0 : 0.0);

    w.scalar("mode.point_estimate", ckpt.point_estimate ? 1.0 : 0.0);
    if (ckpt.point_estimate) {
      w.matrix("point.w2", ckpt.w2_point);
    } else {
      w.scalar("posterior.prior_variance", ckpt.posterior.prior_variance);
      for (int c = 0; c < ckpt.posterior.classes; ++c) {
        const std::string suffix = "." + std::to_string(c);
        const auto ci = static_cast<std::size_t>(c);
        w.matrix("posterior.mu" + suffix, ckpt.posterior.mu[ci]);
        w.matrix("posterior.lower_strict" + suffix, ckpt.posterior.lower_strict[ci]);
        w.matrix("posterior.log_diag" + suffix, ckpt.posterior.log_diag[ci]);
      }
    }

    w.matrix("invariance.eta", ckpt.invariance.eta);
    Eigen::MatrixXd mask(6, 1);
    for (int i = 0; i < 6; ++i) {
      mask(i, 0) = ckpt.invariance.trainable[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    w.matrix("invariance.trainable", mask);

    w.scalar("train.step", ckpt.step);
    w.scalar_u64("train.seed", ckpt.seed);
    w.scalar_u64("train.config_hash", ckpt.config_hash);
    w.scalar("adam.step", ckpt.adam_step);
    for (const auto& [name, mo] : ckpt.adam_state) {
      w.matrix("adam.m." + name, mo.m);
      w.matrix("adam.v." + name, mo.v);
    }
    if (!out) throw FormatError("ivnw: write failure on " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("ivnw: cannot rename " + tmp + " to " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("ivnw: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("ivnw: bad magic in " + path);
  }
  std::uint32_t version;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kVersion) {
    throw FormatError("ivnw: unsupported version in " + path);
  }
  RecordReader r(read_records(in, path), path);

  Checkpoint ckpt;
  ckpt.spec.flavor = r.scalar("spec.flavor") == 0.0 ? Flavor::RFF : Flavor::ReLU;
  ckpt.spec.hidden = static_cast<int>(r.scalar("spec.hidden"));
  ckpt.spec.image_mode = r.scalar("spec.image_mode") != 0.0;
  ckpt.spec.height = static_cast<int>(r.scalar("spec.height"));
  ckpt.spec.width = static_cast<int>(r.scalar("spec.width"));
  ckpt.spec.coord_dim = static_cast<int>(r.scalar("spec.coord_dim"));
  ckpt.spec.classes = static_cast<int>(r.scalar("spec.classes"));
  ckpt.spec.rff_lengthscale = r.scalar("spec.rff_lengthscale");
  ckpt.spec.blur_sigma = r.scalar("spec.blur_sigma");

  ckpt.first.W1 = r.matrix("first.w1");
  ckpt.first.phase = r.matrix("first.phase");
  ckpt.first.trainable = r.scalar("first.trainable") != 0.0;

  ckpt.point_estimate = r.scalar("mode.point_estimate") != 0.0;
  if (ckpt.point_estimate) {
    ckpt.w2_point = r.matrix("point.w2");
  } else {
    ckpt.posterior.classes = ckpt.spec.classes;
    ckpt.posterior.dim = ckpt.spec.hidden;
    ckpt.posterior.prior_variance = r.scalar("posterior.prior_variance");
    for (int c = 0; c < ckpt.posterior.classes; ++c) {
      const std::string suffix = "." + std::to_string(c);
      ckpt.posterior.mu.push_back(r.matrix("posterior.mu" + suffix));
      ckpt.posterior.lower_strict.push_back(r.matrix("posterior.lower_strict" + suffix));
      ckpt.posterior.log_diag.push_back(r.matrix("posterior.log_diag" + suffix));
    }
    ckpt.posterior.validate();
  }

  const Eigen::MatrixXd eta = r.matrix("invariance.eta");
  const Eigen::MatrixXd mask = r.matrix("invariance.trainable");
  if (eta.rows() != 6 || mask.rows() != 6) {
    throw FormatError("ivnw: invariance records have wrong shape in " + path);
  }
  ckpt.invariance.eta = eta.col(0);
  for (int i = 0; i < 6; ++i) {
    ckpt.invariance.trainable[static_cast<std::size_t>(i)] = mask(i, 0) != 0.0;
  }

  ckpt.step = static_cast<int>(r.scalar("train.step"));
  ckpt.seed = r.scalar_u64("train.seed");
  ckpt.config_hash = r.scalar_u64("train.config_hash");
  ckpt.adam_step = static_cast<int>(r.scalar("adam.step"));
  for (const std::string& name : r.names_with_prefix("adam.m.")) {
    const std::string tensor = name.substr(7);
    Adam::Moments mo;
    mo.m = r.matrix(name);
    mo.v = r.matrix("adam.v." + tensor);
    ckpt.adam_state.emplace(tensor, std::move(mo));
  }
  return ckpt;
}

}  // namespace ivw
