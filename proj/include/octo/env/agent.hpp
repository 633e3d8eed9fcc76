#pragma once

#include <string_view>
#include <vector>

namespace octo::env {

/// Reward role of an agent. Position and orientation reachers follow their
/// own arm's end-effector goal; base adjusters share the attitude reward.
enum class AgentRole { PositionReacher, OrientationReacher, BaseAdjuster };

std::string_view role_name(AgentRole role);
AgentRole parse_role(std::string_view name);

/// Observation length of every agent: base pose and twist (12), the agent's
/// joint angles and velocities (3 + 3) and a 6-entry goal block.
inline constexpr int kObservationSize = 24;
inline constexpr int kJointsPerAgent = 3;

struct AgentSpec {
  int id = 1;  // 1-based
  int arm = 0;
  std::vector<int> joints;  // global joint indices, contiguous triple
  AgentRole role = AgentRole::PositionReacher;

  int action_size() const { return static_cast<int>(joints.size()); }
};

/// Throws ConfigurationError unless ids are 1..n in order, each agent owns a
/// contiguous joint triple on its arm and the joint sets partition
/// [0, num_joints).
void validate_agents(const std::vector<AgentSpec>& agents, int num_joints, const std::vector<int>& joint_arm);

}  // namespace octo::env
