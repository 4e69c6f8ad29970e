#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ivw/data.hpp"
#include "ivw/liegroup.hpp"
#include "ivw/model.hpp"
#include "ivw/optim.hpp"
#include "ivw/vi.hpp"

namespace ivw {

// Everything needed to resume a training run bit-for-bit: model, posterior
// (or point weights), invariance parameters and the optimizer moments.
struct Checkpoint {
  ModelSpec spec;
  FirstLayer first;
  bool point_estimate = false;
  VariationalPosterior posterior;  // valid when !point_estimate
  Eigen::MatrixXd w2_point;        // valid when point_estimate
  InvarianceParams invariance;
  int step = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  int adam_step = 0;
  std::map<std::string, Adam::Moments> adam_state;
};

// Binary container: magic "IVNW", u32 version (currently 1), then a stream
// of named tensor records (u32 name length, name bytes, u8 dtype with
// 0 = f64 and 1 = u64 scalar, u32 rank, u32 dims, raw little-endian data).
// Writes go to a temporary file renamed into place on success.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws FormatError naming the offending record on malformed input.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ivw
