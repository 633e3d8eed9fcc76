#include "octo/assembly/agents.hpp"

#include <string>

#include "octo/common/errors.hpp"

namespace octo::assembly {

std::vector<AgentSpec> divide_agents(const dynamics::KinematicTree& tree, const env::TaskSpec& task) {
  task.validate(tree.arm_count());
  std::vector<AgentSpec> agents;
  for (int arm = 0; arm < tree.arm_count(); ++arm) {
    const std::vector<int>& joints = tree.arm_joints(arm);
    if (joints.size() % env::kJointsPerAgent != 0) {
      throw ConfigurationError("arm " + std::to_string(arm) + " has " + std::to_string(joints.size()) +
                               " joints, not a multiple of three");
    }
    if (joints.size() != 3 && joints.size() != 6) {
      throw ConfigurationError("arm " + std::to_string(arm) + ": only 3- and 6-joint arms can be divided");
    }
    const bool base = task.arm_task(arm) == env::TaskKind::BaseReorientation;
    for (std::size_t first = 0; first < joints.size(); first += env::kJointsPerAgent) {
      AgentSpec a;
      a.id = static_cast<int>(agents.size()) + 1;
      a.arm = arm;
      a.joints.assign(joints.begin() + static_cast<std::ptrdiff_t>(first),
                      joints.begin() + static_cast<std::ptrdiff_t>(first + env::kJointsPerAgent));
      if (base) {
        a.role = AgentRole::BaseAdjuster;
      } else {
        a.role = first == 0 ? AgentRole::PositionReacher : AgentRole::OrientationReacher;
      }
      agents.push_back(std::move(a));
    }
  }
  return agents;
}

}  // namespace octo::assembly
