#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "octo/nn/adam.hpp"
#include "octo/nn/gaussian_policy.hpp"
#include "octo/nn/mlp.hpp"

// Binary layout, all integers and floats little-endian:
//
//   MLP block     u32 magic "OMLP", u32 version (1), u32 activation,
//                 u32 layer-size count k, u32 sizes[k],
//                 per layer: f64 weights[out * in] row-major, f64 bias[out]
//   policy block  u32 magic "OGPL", u32 version (1), MLP block,
//                 u32 action count a, f64 log_std[a]
//   Adam block    u32 magic "OADM", u32 version (1), i64 step, f64 lr, beta1,
//                 beta2, eps, u64 count c, f64 m[c], f64 v[c]

namespace octo::nn {

class BinaryWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void bytes(std::string_view s);
  /// u32 length followed by the characters.
  void str(std::string_view s);
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

/// Reads a buffer written by BinaryWriter. Every read past the end throws
/// CorruptFileError.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_mlp(BinaryWriter& out, const Mlp& mlp);
Mlp read_mlp(BinaryReader& in);
void write_policy(BinaryWriter& out, const GaussianPolicy& policy);
GaussianPolicy read_policy(BinaryReader& in);
void write_adam(BinaryWriter& out, const AdamState& state);
AdamState read_adam(BinaryReader& in);

}  // namespace octo::nn
