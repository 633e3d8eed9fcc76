#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "octo/dynamics/dynamics.hpp"
#include "octo/env/agent.hpp"
#include "octo/env/pd_driver.hpp"
#include "octo/env/rewards.hpp"
#include "octo/env/task.hpp"

namespace octo::env {

struct EnvConfig {
  TaskSpec task;
  RewardConfig reward;
  GoalRanges ranges;
  PdGains arm_gains;  // one entry per arm joint; empty selects default_arm_gains
  double dt = 1e-3;   // s, dynamics step
  int substeps = 200; // dynamics steps per control step
  std::optional<DisturbanceSpec> disturbance;

  double control_period() const { return dt * substeps; }
  double horizon() const { return control_period() * task.episode_length; }
};

struct StepInfo {
  std::vector<double> position_error;     // per arm, |p_d - p_e|, m
  std::vector<double> orientation_error;  // per arm, |phi_d - phi_e| wrapped, rad
  Vec3 base_error = Vec3::Zero();         // phi_d^b - phi_b wrapped, rad
  bool collided = false;
  dynamics::Momentum momentum;
  Vec3 external_force = Vec3::Zero();   // applied during this step
  Vec3 external_torque = Vec3::Zero();
  double time = 0.0;
};

struct StepResult {
  std::vector<Eigen::VectorXd> observations;  // one per agent
  std::vector<double> rewards;                // one per agent
  bool done = false;
  StepInfo info;
};

/// One simulated robot with its agents. Observation of every agent:
///   [p_b(3), phi_b(3), v_b(3), omega_b(3), q^a(3), qdot^a(3), goal(6)]
/// with goal = (p_e, p_d) for position reachers, (phi_e, phi_d) for
/// orientation reachers and (phi_d^b - phi_b, phi_d^b) for base adjusters.
/// Angles are wrapped into (-pi, pi]; positions and velocities are world
/// frame.
///
/// Global state for the critics:
///   [p_b, phi_b, v_b, omega_b, q(n), qdot(n), per arm (p_e, p_d, phi_e, phi_d),
///    phi_d^b - phi_b, phi_d^b, t / horizon]
class Environment {
 public:
  Environment(std::shared_ptr<const dynamics::KinematicTree> tree, std::vector<AgentSpec> agents,
              EnvConfig config);

  const dynamics::KinematicTree& tree() const { return *tree_; }
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const EnvConfig& config() const { return config_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  /// Length of the joint action: sum of agent action sizes.
  int action_size() const { return action_size_; }
  int global_state_size() const;

  /// Home configuration, zero velocity, fresh goals drawn from `seed`.
  std::vector<Eigen::VectorXd> reset(std::uint64_t seed);
  /// Home configuration with explicit goals.
  std::vector<Eigen::VectorXd> reset(const GoalSet& goals);

  /// Joint action in agent order, each entry in [-1, 1] (clamped) scaling the
  /// joint's velocity limit. Throws ConfigurationError on a length mismatch
  /// and TrainingError once the episode is done.
  StepResult step(std::span<const double> joint_action);

  Eigen::VectorXd observation(int agent_index) const;
  std::vector<Eigen::VectorXd> observations() const;
  Eigen::VectorXd global_state() const;
  StepInfo info() const;

  const dynamics::SystemState& state() const { return state_; }
  const GoalSet& goals() const { return goals_; }
  /// Replaces goals mid-episode (used by locality checks).
  void set_goals(const GoalSet& goals);
  int step_count() const { return steps_; }
  bool done() const { return steps_ >= config_.task.episode_length; }

 private:
  void refresh_kinematics();

  std::shared_ptr<const dynamics::KinematicTree> tree_;
  std::vector<AgentSpec> agents_;
  EnvConfig config_;
  int action_size_ = 0;
  Eigen::VectorXd kp_, kd_;  // per global joint
  std::vector<std::uint8_t> locked_;
  int disturbance_body_ = -1;

  dynamics::SystemState state_;
  GoalSet goals_;
  int steps_ = 0;
  Eigen::VectorXd prev_action_;
  Eigen::VectorXd prev_qdot_;
  dynamics::Kinematics kin_;
  std::vector<Vec3> ee_euler_;
  Vec3 base_euler_ = Vec3::Zero();
};

}  // namespace octo::env
