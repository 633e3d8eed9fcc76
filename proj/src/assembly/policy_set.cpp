#include "octo/assembly/policy_set.hpp"

#include "octo/common/errors.hpp"
#include "octo/common/hash.hpp"
#include "octo/common/rng.hpp"
#include "octo/env/environment.hpp"
#include "octo/nn/serialize.hpp"
#include "octo/robot/robot.hpp"

namespace octo::assembly {

std::string_view algorithm_name(Algorithm a) { return a == Algorithm::Mappo ? "mappo" : "ppo-central"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "mappo") return Algorithm::Mappo;
  if (name == "ppo-central") return Algorithm::CentralPpo;
  throw ConfigurationError("unknown algorithm '" + std::string(name) + "' (expected mappo or ppo-central)");
}

RobotStamp RobotStamp::of(const robot::RobotConfig& config) {
  return {config.name, robot::config_hash(config), config.model_version, config.arm_count, config.joints_per_arm};
}

namespace {

Eigen::VectorXd actor_action(const nn::GaussianPolicy& actor, const Eigen::VectorXd& input, Rng* rng) {
  return rng == nullptr ? actor.deterministic_action(input) : actor.sample(input, *rng).action;
}

}  // namespace

Eigen::VectorXd PolicySet::act(const env::Environment& env, const std::vector<Eigen::VectorXd>& observations,
                               Rng* rng) const {
  Eigen::VectorXd action(env.action_size());
  if (algorithm == Algorithm::CentralPpo) {
    const Eigen::VectorXd g = env.global_state();
    const AgentPolicy& p = agents.begin()->second;
    const Eigen::VectorXd a = actor_action(p.actor, g.head(g.size() - 1), rng);
    // The central actor emits joints in tree order; the environment expects
    // agent order.
    Eigen::Index at = 0;
    for (const env::AgentSpec& spec : env.agents()) {
      for (int j : spec.joints) action[at++] = a[j];
    }
    return action;
  }
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < env.agents().size(); ++i) {
    const env::AgentSpec& spec = env.agents()[i];
    const AgentPolicy& p = agents.at(spec.id);
    action.segment(at, spec.action_size()) = actor_action(p.actor, observations[i], rng);
    at += spec.action_size();
  }
  return action;
}

void PolicySet::check_compatible(const env::Environment& env) const {
  if (agents.empty()) throw CompositionError("policy set '" + name + "' holds no actors");
  if (algorithm == Algorithm::CentralPpo) {
    const AgentPolicy& p = agents.begin()->second;
    if (p.actor.obs_size() != env.global_state_size() - 1 || p.actor.action_size() != env.tree().num_joints()) {
      throw CompositionError("central actor of '" + name + "' does not match the robot's state or joint count");
    }
    return;
  }
  for (const env::AgentSpec& spec : env.agents()) {
    const std::string who = "agent " + std::to_string(spec.id);
    auto it = agents.find(spec.id);
    if (it == agents.end()) throw CompositionError(who + ": no actor in policy set '" + name + "'");
    const AgentPolicy& p = it->second;
    if (p.spec.joints != spec.joints || p.spec.arm != spec.arm) {
      throw CompositionError(who + ": actor was trained on different joints");
    }
    if (p.spec.role != spec.role) {
      throw CompositionError(who + ": actor role " + std::string(env::role_name(p.spec.role)) +
                             " does not match required role " + std::string(env::role_name(spec.role)));
    }
    if (p.actor.obs_size() != env::kObservationSize || p.actor.action_size() != spec.action_size()) {
      throw CompositionError(who + ": actor input/output sizes do not match the observation layout");
    }
  }
}

PolicySet PolicySet::without_critics() const {
  PolicySet copy = *this;
  for (auto& [id, p] : copy.agents) p.critic.reset();
  return copy;
}

std::uint64_t PolicySet::actor_hash() const {
  nn::BinaryWriter w;
  for (const auto& [id, p] : agents) {
    w.u32(static_cast<std::uint32_t>(id));
    nn::write_policy(w, p.actor);
  }
  const std::string& d = w.data();
  return fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(d.data()), d.size()));
}

}  // namespace octo::assembly
