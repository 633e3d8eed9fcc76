#include "octo/assembly/reassemble.hpp"

#include <string>

#include "octo/assembly/agents.hpp"
#include "octo/common/errors.hpp"

namespace octo::assembly {

Reassembly reassemble(const dynamics::KinematicTree& tree, const RobotStamp& robot,
                      const std::map<int, Donor>& donors, int episode_length) {
  std::vector<env::TaskKind> kinds;
  for (int arm = 0; arm < tree.arm_count(); ++arm) {
    auto it = donors.find(arm);
    if (it == donors.end() || it->second.set == nullptr) {
      throw CompositionError("arm " + std::to_string(arm) + " has no donor policy set");
    }
    if (it->second.kind == env::TaskKind::Mixed) {
      throw CompositionError("arm " + std::to_string(arm) + ": donor task must be trajectory or reorientation");
    }
    kinds.push_back(it->second.kind);
  }
  Reassembly out;
  out.task = env::TaskSpec::mixed(kinds, episode_length);
  const std::vector<AgentSpec> targets = divide_agents(tree, out.task);

  out.set.name = "reassembled";
  out.set.algorithm = Algorithm::Mappo;
  out.set.robot = robot;
  out.set.task = out.task;
  out.set.provenance.task = "mixed";
  for (const AgentSpec& target : targets) {
    const std::string who = "agent " + std::to_string(target.id) + " (arm " + std::to_string(target.arm) + ")";
    const PolicySet& donor = *donors.at(target.arm).set;
    if (donor.algorithm != Algorithm::Mappo) {
      throw CompositionError(who + ": donor '" + donor.name + "' is a centralized policy and cannot be split");
    }
    if (donor.robot.joints_per_arm != static_cast<int>(tree.arm_joints(target.arm).size())) {
      throw CompositionError(who + ": donor '" + donor.name + "' was trained on " +
                             std::to_string(donor.robot.joints_per_arm) + "-joint arms, target arm has " +
                             std::to_string(tree.arm_joints(target.arm).size()));
    }
    const AgentPolicy* match = nullptr;
    for (const auto& [id, p] : donor.agents) {
      if (p.spec.arm == target.arm && p.spec.joints == target.joints) match = &p;
    }
    if (match == nullptr) {
      throw CompositionError(who + ": donor '" + donor.name + "' has no actor for these joints");
    }
    if (match->spec.role != target.role) {
      throw CompositionError(who + ": donor actor plays role " + std::string(env::role_name(match->spec.role)) +
                             ", the " + std::string(env::task_name(donors.at(target.arm).kind)) + " task needs " +
                             std::string(env::role_name(target.role)));
    }
    if (match->actor.obs_size() != env::kObservationSize || match->actor.action_size() != target.action_size()) {
      throw CompositionError(who + ": donor actor sizes do not match the observation layout");
    }
    AgentPolicy p;
    p.spec = target;
    p.actor = match->actor;
    out.set.agents.emplace(target.id, std::move(p));
  }
  return out;
}

}  // namespace octo::assembly
