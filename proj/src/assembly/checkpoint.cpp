#include "octo/assembly/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "octo/common/errors.hpp"
#include "octo/common/hash.hpp"
#include "octo/nn/serialize.hpp"

namespace octo::assembly {

namespace {

constexpr std::string_view kMagic = "OCTOPSET";

std::uint64_t checksum(std::string_view bytes) {
  return fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::uint32_t bounded(std::uint32_t v, std::uint32_t max, const char* what) {
  if (v > max) throw CorruptFileError(std::string("implausible ") + what);
  return v;
}

}  // namespace

std::string serialize_policies(const PolicySet& set) {
  nn::BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(set.robot.model_version));
  w.u64(set.robot.hash);
  w.str(set.robot.name);
  w.u32(static_cast<std::uint32_t>(set.robot.arm_count));
  w.u32(static_cast<std::uint32_t>(set.robot.joints_per_arm));
  w.u32(static_cast<std::uint32_t>(set.algorithm));
  w.u32(static_cast<std::uint32_t>(set.task.kind));
  w.u32(static_cast<std::uint32_t>(set.task.episode_length));
  w.u32(static_cast<std::uint32_t>(set.task.arm_tasks.size()));
  for (env::TaskKind k : set.task.arm_tasks) w.u32(static_cast<std::uint32_t>(k));
  w.str(set.name);
  w.str(set.provenance.task);
  w.u64(set.provenance.config_hash);
  w.u64(set.provenance.seed);
  w.i64(set.provenance.env_steps);
  w.u32(static_cast<std::uint32_t>(set.agents.size()));
  for (const auto& [id, p] : set.agents) {
    w.u32(static_cast<std::uint32_t>(id));
    w.u32(static_cast<std::uint32_t>(p.spec.arm));
    w.u32(static_cast<std::uint32_t>(p.spec.role));
    w.u32(static_cast<std::uint32_t>(p.spec.joints.size()));
    for (int j : p.spec.joints) w.u32(static_cast<std::uint32_t>(j));
    nn::write_policy(w, p.actor);
    w.bytes(std::string(1, p.critic ? '\1' : '\0'));
    if (p.critic) nn::write_mlp(w, *p.critic);
  }
  std::string out = w.data();
  nn::BinaryWriter tail;
  tail.u64(checksum(out));
  return out + tail.data();
}

PolicySet deserialize_policies(const std::string& bytes) {
  if (bytes.size() < kMagic.size() + 12 || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw CorruptFileError("not a policy checkpoint (bad magic)");
  }
  nn::BinaryReader version_reader(std::string_view(bytes).substr(kMagic.size(), 4));
  const std::uint32_t version = version_reader.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const std::string_view body = std::string_view(bytes).substr(0, bytes.size() - 8);
  nn::BinaryReader trailer(std::string_view(bytes).substr(bytes.size() - 8));
  if (trailer.u64() != checksum(body)) throw CorruptFileError("checkpoint checksum mismatch");

  nn::BinaryReader r(body);
  r.bytes(kMagic.size());
  r.u32();
  PolicySet set;
  set.robot.model_version = static_cast<int>(r.u32());
  set.robot.hash = r.u64();
  set.robot.name = r.str();
  set.robot.arm_count = static_cast<int>(bounded(r.u32(), 64, "arm count"));
  set.robot.joints_per_arm = static_cast<int>(bounded(r.u32(), 64, "joint count"));
  set.algorithm = static_cast<Algorithm>(bounded(r.u32(), 1, "algorithm tag"));
  set.task.kind = static_cast<env::TaskKind>(bounded(r.u32(), 2, "task kind"));
  set.task.episode_length = static_cast<int>(bounded(r.u32(), 1u << 24, "episode length"));
  const std::uint32_t arm_tasks = bounded(r.u32(), 64, "arm task count");
  for (std::uint32_t i = 0; i < arm_tasks; ++i) {
    set.task.arm_tasks.push_back(static_cast<env::TaskKind>(bounded(r.u32(), 1, "arm task")));
  }
  set.name = r.str();
  set.provenance.task = r.str();
  set.provenance.config_hash = r.u64();
  set.provenance.seed = r.u64();
  set.provenance.env_steps = r.i64();
  const std::uint32_t count = bounded(r.u32(), 4096, "agent count");
  for (std::uint32_t i = 0; i < count; ++i) {
    AgentPolicy p;
    p.spec.id = static_cast<int>(r.u32());
    p.spec.arm = static_cast<int>(r.u32());
    p.spec.role = static_cast<env::AgentRole>(bounded(r.u32(), 2, "agent role"));
    const std::uint32_t k = bounded(r.u32(), 4096, "joint count");
    for (std::uint32_t j = 0; j < k; ++j) p.spec.joints.push_back(static_cast<int>(r.u32()));
    p.actor = nn::read_policy(r);
    const std::string_view flag = r.bytes(1);
    if (flag[0] == '\1') {
      p.critic = nn::read_mlp(r);
    } else if (flag[0] != '\0') {
      throw CorruptFileError("bad critic flag");
    }
    if (!set.agents.emplace(p.spec.id, std::move(p)).second) throw CorruptFileError("duplicate agent id");
  }
  if (r.remaining() != 0) throw CorruptFileError("trailing bytes after the last agent");
  return set;
}

void save_policies(const PolicySet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write checkpoint '" + path + "'");
  const std::string bytes = serialize_policies(set);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigurationError("failed writing checkpoint '" + path + "'");
}

PolicySet load_policies(const std::string& path, const std::optional<RobotStamp>& expected,
                        std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  PolicySet set = deserialize_policies(ss.str());
  if (expected) {
    if (set.robot.model_version != expected->model_version) {
      throw VersionError("checkpoint '" + path + "' targets robot model_version " +
                         std::to_string(set.robot.model_version) + ", robot has " +
                         std::to_string(expected->model_version));
    }
    if (set.robot.hash != expected->hash && warnings != nullptr) {
      warnings->push_back("checkpoint '" + path + "' was trained on robot config " + to_hex(set.robot.hash) +
                          ", running on " + to_hex(expected->hash));
    }
  }
  return set;
}

}  // namespace octo::assembly
