#include "octo/nn/serialize.hpp"

#include <bit>
#include <cstring>

#include "octo/common/errors.hpp"

namespace octo::nn {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kMlpMagic = 0x504c4d4f;     // "OMLP"
constexpr std::uint32_t kPolicyMagic = 0x4c50474f;  // "OGPL"
constexpr std::uint32_t kAdamMagic = 0x4d44414f;    // "OADM"
constexpr std::uint32_t kMaxLayerSize = 1u << 16;

void expect(BinaryReader& in, std::uint32_t magic, const char* what) {
  if (in.u32() != magic) throw CorruptFileError(std::string("bad magic for ") + what + " block");
  const std::uint32_t version = in.u32();
  if (version != kFormatVersion) {
    throw VersionError(std::string(what) + " block version " + std::to_string(version) + " is not supported");
  }
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::bytes(std::string_view s) { buf_.append(s); }

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

std::string_view BinaryReader::bytes(std::size_t n) {
  if (n > remaining()) throw CorruptFileError("unexpected end of data");
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t BinaryReader::u32() {
  const std::string_view b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
  return v;
}

std::uint64_t BinaryReader::u64() {
  const std::string_view b = bytes(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  return std::string(bytes(n));
}

void write_mlp(BinaryWriter& out, const Mlp& mlp) {
  out.u32(kMlpMagic);
  out.u32(kFormatVersion);
  out.u32(static_cast<std::uint32_t>(mlp.activation()));
  out.u32(static_cast<std::uint32_t>(mlp.sizes().size()));
  for (int s : mlp.sizes()) out.u32(static_cast<std::uint32_t>(s));
  for (double p : mlp.params()) out.f64(p);
}

Mlp read_mlp(BinaryReader& in) {
  expect(in, kMlpMagic, "MLP");
  const std::uint32_t act = in.u32();
  if (act > static_cast<std::uint32_t>(Activation::Identity)) throw CorruptFileError("unknown MLP activation");
  const std::uint32_t count = in.u32();
  if (count < 2 || count > 64) throw CorruptFileError("implausible MLP layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t s = in.u32();
    if (s == 0 || s > kMaxLayerSize) throw CorruptFileError("implausible MLP layer size");
    sizes.push_back(static_cast<int>(s));
  }
  Mlp mlp(sizes, static_cast<Activation>(act));
  if (in.remaining() < 8 * mlp.num_params()) throw CorruptFileError("truncated MLP parameters");
  std::span<double> p = mlp.mutable_params();
  for (double& v : p) v = in.f64();
  return mlp;
}

void write_policy(BinaryWriter& out, const GaussianPolicy& policy) {
  out.u32(kPolicyMagic);
  out.u32(kFormatVersion);
  write_mlp(out, policy.mean_net());
  out.u32(static_cast<std::uint32_t>(policy.log_std().size()));
  for (Eigen::Index i = 0; i < policy.log_std().size(); ++i) out.f64(policy.log_std()[i]);
}

GaussianPolicy read_policy(BinaryReader& in) {
  expect(in, kPolicyMagic, "policy");
  Mlp mean = read_mlp(in);
  const std::uint32_t n = in.u32();
  if (static_cast<int>(n) != mean.output_size()) throw CorruptFileError("log_std length does not match the network");
  Eigen::VectorXd log_std(n);
  for (std::uint32_t i = 0; i < n; ++i) log_std[i] = in.f64();
  if (!log_std.allFinite() || (log_std.array() < kLogStdMin).any() || (log_std.array() > kLogStdMax).any()) {
    throw CorruptFileError("log_std outside its valid range");
  }
  return GaussianPolicy(std::move(mean), log_std);
}

void write_adam(BinaryWriter& out, const AdamState& s) {
  out.u32(kAdamMagic);
  out.u32(kFormatVersion);
  out.i64(s.step);
  out.f64(s.lr);
  out.f64(s.beta1);
  out.f64(s.beta2);
  out.f64(s.eps);
  out.u64(static_cast<std::uint64_t>(s.m.size()));
  for (Eigen::Index i = 0; i < s.m.size(); ++i) out.f64(s.m[i]);
  for (Eigen::Index i = 0; i < s.v.size(); ++i) out.f64(s.v[i]);
}

AdamState read_adam(BinaryReader& in) {
  expect(in, kAdamMagic, "Adam");
  AdamState s;
  s.step = in.i64();
  s.lr = in.f64();
  s.beta1 = in.f64();
  s.beta2 = in.f64();
  s.eps = in.f64();
  const std::uint64_t n = in.u64();
  if (n > in.remaining() / 16) throw CorruptFileError("truncated Adam moments");
  s.m.resize(static_cast<Eigen::Index>(n));
  s.v.resize(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) s.m[static_cast<Eigen::Index>(i)] = in.f64();
  for (std::uint64_t i = 0; i < n; ++i) s.v[static_cast<Eigen::Index>(i)] = in.f64();
  return s;
}

}  // namespace octo::nn
