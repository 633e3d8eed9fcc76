#include "octo/env/agent.hpp"

#include <string>

#include "octo/common/errors.hpp"

namespace octo::env {

std::string_view role_name(AgentRole role) {
  switch (role) {
    case AgentRole::PositionReacher: return "position";
    case AgentRole::OrientationReacher: return "orientation";
    case AgentRole::BaseAdjuster: return "base";
  }
  return "?";
}

AgentRole parse_role(std::string_view name) {
  for (AgentRole r : {AgentRole::PositionReacher, AgentRole::OrientationReacher, AgentRole::BaseAdjuster}) {
    if (role_name(r) == name) return r;
  }
  throw ConfigurationError("unknown agent role '" + std::string(name) + "'");
}

void validate_agents(const std::vector<AgentSpec>& agents, int num_joints, const std::vector<int>& joint_arm) {
  std::vector<int> owner(static_cast<std::size_t>(num_joints), 0);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const AgentSpec& a = agents[k];
    const std::string name = "agent " + std::to_string(a.id);
    if (a.id != static_cast<int>(k) + 1) throw ConfigurationError(name + ": ids must run 1..n in order");
    if (static_cast<int>(a.joints.size()) != kJointsPerAgent) {
      throw ConfigurationError(name + ": must own exactly three joints");
    }
    for (std::size_t j = 0; j < a.joints.size(); ++j) {
      const int joint = a.joints[j];
      if (joint < 0 || joint >= num_joints) throw ConfigurationError(name + ": joint index out of range");
      if (j > 0 && joint != a.joints[j - 1] + 1) throw ConfigurationError(name + ": joints must be contiguous");
      if (joint_arm[static_cast<std::size_t>(joint)] != a.arm) {
        throw ConfigurationError(name + ": joint " + std::to_string(joint) + " is not on arm " +
                                 std::to_string(a.arm));
      }
      if (owner[static_cast<std::size_t>(joint)]++ != 0) {
        throw ConfigurationError(name + ": joint " + std::to_string(joint) + " is already owned");
      }
    }
  }
  for (int j = 0; j < num_joints; ++j) {
    if (owner[static_cast<std::size_t>(j)] == 0) {
      throw ConfigurationError("joint " + std::to_string(j) + " is not controlled by any agent");
    }
  }
}

}  // namespace octo::env
