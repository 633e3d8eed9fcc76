#pragma once

#include <vector>

#include "octo/env/agent.hpp"
#include "octo/env/task.hpp"

namespace octo::assembly {

using env::AgentRole;
using env::AgentSpec;

/// Three-joint agents, numbered from 1 in arm order. A 6-joint arm yields a
/// position (or base) agent on joints 1-3 and an orientation (or base) agent
/// on joints 4-6; a 3-joint arm yields one agent. Arms on base reorientation
/// get base adjusters. Throws ConfigurationError if an arm's joint count is
/// not 3 or 6 or the task does not fit the robot.
std::vector<AgentSpec> divide_agents(const dynamics::KinematicTree& tree, const env::TaskSpec& task);

}  // namespace octo::assembly
