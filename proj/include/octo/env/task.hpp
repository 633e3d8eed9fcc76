#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "octo/dynamics/kinematic_tree.hpp"

namespace octo {
class Rng;
}

namespace octo::env {

using dynamics::Vec3;

enum class TaskKind { TrajectoryPlanning, BaseReorientation, Mixed };

std::string_view task_name(TaskKind kind);
/// Accepts "trajectory", "reorientation" and "mixed".
TaskKind parse_task(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::TrajectoryPlanning;
  int episode_length = 50;  // control steps
  /// Mixed only: one entry per arm, each TrajectoryPlanning or
  /// BaseReorientation.
  std::vector<TaskKind> arm_tasks;

  static TaskSpec trajectory(int episode_length = 50);
  static TaskSpec reorientation(int episode_length = 50);
  static TaskSpec mixed(std::vector<TaskKind> arm_tasks, int episode_length = 50);

  /// Task executed by one arm.
  TaskKind arm_task(int arm) const;
  /// Reward sharing follows the task: arms on base reorientation share one
  /// reward, trajectory arms never do.
  bool share_reward(int arm) const { return arm_task(arm) == TaskKind::BaseReorientation; }
  /// Throws ConfigurationError if Mixed does not assign every arm exactly one
  /// single-arm kind.
  void validate(int arm_count) const;
};

struct GoalSet {
  std::vector<Vec3> position;     // p_d per arm, world frame, m
  std::vector<Vec3> orientation;  // phi_d per arm, Euler XYZ, rad
  Vec3 base_attitude = Vec3::Zero();  // phi_d^b, Euler XYZ, rad
};

/// Sampling ranges. Position goals come from each arm's target cube.
struct GoalRanges {
  double base_attitude = 0.2;      // rad, per axis
  double ee_orientation = 0.3;     // rad, per axis around the home attitude
};

/// Uniform goals for every arm, drawn in a fixed order: per arm position then
/// orientation, then the base attitude.
GoalSet sample_goals(const dynamics::KinematicTree& tree, const GoalRanges& ranges, Rng& rng);

/// External push applied during [onset, onset + duration). `body` is a tree
/// body index (0 = base); -1 selects the last link of arm 0.
struct DisturbanceSpec {
  double onset = 7.5;  // s
  int body = -1;
  Vec3 force = Vec3(0.0, 2.0, 0.0);  // N, world frame, at the body COM
  Vec3 torque = Vec3::Zero();        // N m
  double duration = 0.1;             // s
  std::optional<int> failed_arm;

  bool has_push() const { return force.squaredNorm() > 0.0 || torque.squaredNorm() > 0.0; }
  /// Throws ConfigurationError unless duration > 0, the onset lies inside the
  /// horizon and the body and failed arm exist.
  void validate(const dynamics::KinematicTree& tree, double horizon) const;
  int resolved_body(const dynamics::KinematicTree& tree) const;
};

}  // namespace octo::env
