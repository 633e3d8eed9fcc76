#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "octo/env/agent.hpp"
#include "octo/env/task.hpp"
#include "octo/nn/gaussian_policy.hpp"
#include "octo/nn/mlp.hpp"

namespace octo {
class Rng;
}

namespace octo::env {
class Environment;
}

namespace octo::robot {
struct RobotConfig;
}

namespace octo::assembly {

/// mappo: one actor per agent on its own observation.
/// ppo-central: a single actor over the global state (time entry dropped)
/// that emits every joint's action.
enum class Algorithm : std::uint32_t { Mappo = 0, CentralPpo = 1 };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct Provenance {
  std::string task;             // task the actors were trained on
  std::uint64_t config_hash = 0;  // training config fingerprint
  std::uint64_t seed = 0;
  std::int64_t env_steps = 0;
};

struct AgentPolicy {
  env::AgentSpec spec;
  nn::GaussianPolicy actor;
  std::optional<nn::Mlp> critic;
};

/// Robot the set was trained for.
struct RobotStamp {
  std::string name;
  std::uint64_t hash = 0;
  int model_version = 1;
  int arm_count = 0;
  int joints_per_arm = 0;

  static RobotStamp of(const robot::RobotConfig& config);
};

class PolicySet {
 public:
  std::string name = "policies";
  Algorithm algorithm = Algorithm::Mappo;
  RobotStamp robot;
  env::TaskSpec task;
  Provenance provenance;
  std::map<int, AgentPolicy> agents;  // by agent id

  /// Joint action for the environment's agents, in agent order. Actors only
  /// read their own observation (mappo) or the global state (ppo-central).
  /// Deterministic tanh(mean) when `rng` is null, sampled otherwise.
  Eigen::VectorXd act(const env::Environment& env, const std::vector<Eigen::VectorXd>& observations,
                      Rng* rng = nullptr) const;

  /// Throws CompositionError naming the first agent of `env` that has no
  /// matching actor (missing id, different joints or role, wrong sizes).
  void check_compatible(const env::Environment& env) const;

  PolicySet without_critics() const;
  /// FNV-1a over the serialized actors, in id order.
  std::uint64_t actor_hash() const;
};

}  // namespace octo::assembly
