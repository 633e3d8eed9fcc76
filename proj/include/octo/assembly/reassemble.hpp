#pragma once

#include <map>

#include "octo/assembly/policy_set.hpp"
#include "octo/dynamics/kinematic_tree.hpp"

namespace octo::assembly {

/// Frozen donor for one arm: the set to borrow actors from and the task the
/// arm will perform.
struct Donor {
  const PolicySet* set = nullptr;
  env::TaskKind kind = env::TaskKind::TrajectoryPlanning;
};

struct Reassembly {
  PolicySet set;
  env::TaskSpec task;  // Mixed, one kind per arm
};

/// Routes every agent of every arm to the donor actor that controlled the
/// same joints in the same role. Actors are copied untouched and critics are
/// dropped. Throws CompositionError naming the offending agent when a donor
/// is missing, was trained for another arm layout or lacks a matching actor.
Reassembly reassemble(const dynamics::KinematicTree& tree, const RobotStamp& robot,
                      const std::map<int, Donor>& donors, int episode_length = 50);

}  // namespace octo::assembly
