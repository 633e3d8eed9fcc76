#pragma once

#include <optional>
#include <string>
#include <vector>

#include "octo/assembly/policy_set.hpp"

// Policy checkpoint, little-endian:
//
//   char[8]  "OCTOPSET"
//   u32      format version (1)
//   u32      robot model_version
//   u64      robot config hash
//   str      robot name          (str = u32 length + bytes)
//   u32      arm count, u32 joints per arm
//   u32      algorithm (0 mappo, 1 ppo-central)
//   u32      task kind, u32 episode length, u32 n, u32 arm task[n]
//   str      set name
//   str      provenance task, u64 config hash, u64 seed, i64 env steps
//   u32      agent count
//   per agent:
//     u32 id, i32 arm, u32 role, u32 k, u32 joints[k]
//     policy block (nn layout)
//     u8 has_critic, [MLP block]
//   u64      FNV-1a of every preceding byte

namespace octo::assembly {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_policies(const PolicySet& set);

/// Parses a checkpoint. Throws CorruptFileError on a bad magic, checksum or
/// truncation and VersionError on an unsupported format version.
PolicySet deserialize_policies(const std::string& bytes);

void save_policies(const PolicySet& set, const std::string& path);

/// Loads and checks the set against the robot it will drive: a different
/// model_version throws VersionError, a different config hash only appends a
/// warning.
PolicySet load_policies(const std::string& path, const std::optional<RobotStamp>& expected = std::nullopt,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace octo::assembly
