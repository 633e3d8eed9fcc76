#include "octo/env/task.hpp"

#include <string>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/robot/robot.hpp"

namespace octo::env {

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::TrajectoryPlanning: return "trajectory";
    case TaskKind::BaseReorientation: return "reorientation";
    case TaskKind::Mixed: return "mixed";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  for (TaskKind k : {TaskKind::TrajectoryPlanning, TaskKind::BaseReorientation, TaskKind::Mixed}) {
    if (task_name(k) == name) return k;
  }
  throw ConfigurationError("unknown task '" + std::string(name) + "'");
}

TaskSpec TaskSpec::trajectory(int episode_length) { return {TaskKind::TrajectoryPlanning, episode_length, {}}; }

TaskSpec TaskSpec::reorientation(int episode_length) { return {TaskKind::BaseReorientation, episode_length, {}}; }

TaskSpec TaskSpec::mixed(std::vector<TaskKind> arm_tasks, int episode_length) {
  return {TaskKind::Mixed, episode_length, std::move(arm_tasks)};
}

TaskKind TaskSpec::arm_task(int arm) const {
  if (kind != TaskKind::Mixed) return kind;
  if (arm < 0 || arm >= static_cast<int>(arm_tasks.size())) {
    throw ConfigurationError("mixed task has no assignment for arm " + std::to_string(arm));
  }
  return arm_tasks[static_cast<std::size_t>(arm)];
}

void TaskSpec::validate(int arm_count) const {
  if (episode_length < 1) throw ConfigurationError("episode_length must be at least 1");
  if (kind != TaskKind::Mixed) {
    if (!arm_tasks.empty()) throw ConfigurationError("per-arm assignments are only valid for the mixed task");
    return;
  }
  if (static_cast<int>(arm_tasks.size()) != arm_count) {
    throw ConfigurationError("mixed task assigns " + std::to_string(arm_tasks.size()) + " arms, robot has " +
                             std::to_string(arm_count));
  }
  for (TaskKind k : arm_tasks) {
    if (k == TaskKind::Mixed) throw ConfigurationError("mixed task: each arm needs a single-arm task kind");
  }
}

GoalSet sample_goals(const dynamics::KinematicTree& tree, const GoalRanges& ranges, Rng& rng) {
  GoalSet g;
  for (int arm = 0; arm < tree.arm_count(); ++arm) {
    const robot::AxisAlignedBox box = robot::default_targets_volume(tree, arm);
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = rng.uniform(box.center[k] - box.half_extents[k], box.center[k] + box.half_extents[k]);
    g.position.push_back(p);
    Vec3 phi;
    for (int k = 0; k < 3; ++k) phi[k] = rng.uniform(-ranges.ee_orientation, ranges.ee_orientation);
    g.orientation.push_back(phi);
  }
  for (int k = 0; k < 3; ++k) g.base_attitude[k] = rng.uniform(-ranges.base_attitude, ranges.base_attitude);
  return g;
}

void DisturbanceSpec::validate(const dynamics::KinematicTree& tree, double horizon) const {
  if (!(duration > 0.0)) throw ConfigurationError("disturbance duration must be positive");
  if (has_push() && !(onset >= 0.0 && onset < horizon)) {
    throw ConfigurationError("disturbance onset " + std::to_string(onset) + " s lies outside the " +
                             std::to_string(horizon) + " s horizon");
  }
  if (!force.allFinite() || !torque.allFinite()) throw ConfigurationError("disturbance wrench must be finite");
  resolved_body(tree);
  if (failed_arm && (*failed_arm < 0 || *failed_arm >= tree.arm_count())) {
    throw ConfigurationError("failed arm " + std::to_string(*failed_arm) + " does not exist");
  }
}

int DisturbanceSpec::resolved_body(const dynamics::KinematicTree& tree) const {
  if (body == -1) return tree.arm_joints(0).back() + 1;
  if (body < 0 || body >= tree.num_bodies()) {
    throw ConfigurationError("disturbance body " + std::to_string(body) + " does not exist");
  }
  return body;
}

}  // namespace octo::env
