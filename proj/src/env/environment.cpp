#include "octo/env/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/dynamics/collision.hpp"
#include "octo/env/euler.hpp"

namespace octo::env {

namespace {

void put(Eigen::VectorXd& out, Eigen::Index& at, const Vec3& v) {
  out.segment<3>(at) = v;
  at += 3;
}

Vec3 wrapped(const Vec3& angles) { return {wrap_angle(angles.x()), wrap_angle(angles.y()), wrap_angle(angles.z())}; }

}  // namespace

Environment::Environment(std::shared_ptr<const dynamics::KinematicTree> tree, std::vector<AgentSpec> agents,
                         EnvConfig config)
    : tree_(std::move(tree)), agents_(std::move(agents)), config_(std::move(config)) {
  if (!tree_) throw ConfigurationError("environment needs a kinematic tree");
  const dynamics::KinematicTree& t = *tree_;
  config_.task.validate(t.arm_count());
  config_.reward.validate();
  if (!(config_.dt > 0.0) || config_.substeps < 1) {
    throw ConfigurationError("dt must be positive and substeps at least 1");
  }
  std::vector<int> joint_arm;
  for (const auto& l : t.links()) joint_arm.push_back(l.arm);
  validate_agents(agents_, t.num_joints(), joint_arm);
  for (const AgentSpec& a : agents_) {
    const TaskKind kind = config_.task.arm_task(a.arm);
    const bool base_role = a.role == AgentRole::BaseAdjuster;
    if (base_role != (kind == TaskKind::BaseReorientation)) {
      throw ConfigurationError("agent " + std::to_string(a.id) + ": role " + std::string(role_name(a.role)) +
                               " does not match the " + std::string(task_name(kind)) + " task of arm " +
                               std::to_string(a.arm));
    }
    action_size_ += a.action_size();
  }

  const int per_arm = static_cast<int>(t.arm_joints(0).size());
  PdGains gains = config_.arm_gains.kp.size() == 0 ? default_arm_gains(per_arm) : config_.arm_gains;
  if (gains.kp.size() != per_arm || gains.kd.size() != per_arm) {
    throw ConfigurationError("PD gains need one entry per arm joint (" + std::to_string(per_arm) + ")");
  }
  if ((gains.kp.array() < 0.0).any() || (gains.kd.array() < 0.0).any()) {
    throw ConfigurationError("PD gains must be non-negative");
  }
  kp_.resize(t.num_joints());
  kd_.resize(t.num_joints());
  for (int arm = 0; arm < t.arm_count(); ++arm) {
    const auto& joints = t.arm_joints(arm);
    if (static_cast<int>(joints.size()) != per_arm) throw ConfigurationError("arms must have equal joint counts");
    for (int k = 0; k < per_arm; ++k) {
      kp_[joints[static_cast<std::size_t>(k)]] = gains.kp[k];
      kd_[joints[static_cast<std::size_t>(k)]] = gains.kd[k];
    }
  }

  locked_.assign(static_cast<std::size_t>(t.num_joints()), 0);
  if (config_.disturbance) {
    config_.disturbance->validate(t, config_.horizon());
    disturbance_body_ = config_.disturbance->resolved_body(t);
    if (config_.disturbance->failed_arm) {
      for (int j : t.arm_joints(*config_.disturbance->failed_arm)) locked_[static_cast<std::size_t>(j)] = 1;
    }
  }
  reset(0);
}

int Environment::global_state_size() const {
  return 12 + 2 * tree_->num_joints() + 12 * tree_->arm_count() + 6 + 1;
}

std::vector<Eigen::VectorXd> Environment::reset(std::uint64_t seed) {
  Rng rng(seed);
  return reset(sample_goals(*tree_, config_.ranges, rng));
}

std::vector<Eigen::VectorXd> Environment::reset(const GoalSet& goals) {
  state_ = dynamics::SystemState::at_rest(*tree_);
  steps_ = 0;
  prev_action_ = Eigen::VectorXd::Zero(action_size_);
  prev_qdot_ = Eigen::VectorXd::Zero(tree_->num_joints());
  set_goals(goals);
  return observations();
}

void Environment::set_goals(const GoalSet& goals) {
  const auto arms = static_cast<std::size_t>(tree_->arm_count());
  if (goals.position.size() != arms || goals.orientation.size() != arms) {
    throw ConfigurationError("goal set must hold one position and one orientation per arm");
  }
  goals_ = goals;
  refresh_kinematics();
}

void Environment::refresh_kinematics() {
  kin_ = dynamics::forward_kinematics(*tree_, state_);
  ee_euler_.clear();
  for (const auto& ee : kin_.end_effectors) ee_euler_.push_back(euler_xyz(ee.orientation));
  base_euler_ = euler_xyz(state_.base_orientation);
}

StepResult Environment::step(std::span<const double> joint_action) {
  if (static_cast<int>(joint_action.size()) != action_size_) {
    throw ConfigurationError("joint action has " + std::to_string(joint_action.size()) + " entries, expected " +
                             std::to_string(action_size_));
  }
  if (done()) throw TrainingError("step called on a finished episode");
  const dynamics::KinematicTree& t = *tree_;
  const int n = t.num_joints();

  Eigen::VectorXd action(action_size_);
  Eigen::VectorXd desired = Eigen::VectorXd::Zero(n);
  {
    Eigen::Index at = 0;
    for (const AgentSpec& a : agents_) {
      for (int j : a.joints) {
        const double raw = joint_action[static_cast<std::size_t>(at)];
        if (!std::isfinite(raw)) throw InputError("joint action contains a non-finite entry");
        const double u = std::clamp(raw, -1.0, 1.0);
        action[at++] = u;
        desired[j] = locked_[static_cast<std::size_t>(j)] ? 0.0 : u * t.limits().qdot_max[j];
      }
    }
  }

  StepInfo info_out;
  std::vector<dynamics::ExternalWrench> wrench;
  Eigen::VectorXd tau(n), accel(n);
  PdGains gains{kp_, kd_};
  const auto tau_max = std::span<const double>(t.limits().tau_max.data(), static_cast<std::size_t>(n));
  for (int k = 0; k < config_.substeps; ++k) {
    accel = (state_.qdot - prev_qdot_) / config_.dt;
    prev_qdot_ = state_.qdot;
    pd_driver(std::span<const double>(desired.data(), static_cast<std::size_t>(n)),
              std::span<const double>(state_.qdot.data(), static_cast<std::size_t>(n)),
              std::span<const double>(accel.data(), static_cast<std::size_t>(n)), gains, tau_max,
              std::span<double>(tau.data(), static_cast<std::size_t>(n)));
    for (int j = 0; j < n; ++j) {
      if (locked_[static_cast<std::size_t>(j)]) tau[j] = 0.0;
    }
    wrench.clear();
    if (config_.disturbance && config_.disturbance->has_push()) {
      const DisturbanceSpec& d = *config_.disturbance;
      // Half a sub-step of slack keeps the window robust to accumulated time.
      const double slack = 0.5 * config_.dt;
      if (state_.time >= d.onset - slack && state_.time < d.onset + d.duration - slack) {
        wrench.push_back({disturbance_body_, d.force, d.torque});
        info_out.external_force = d.force;
        info_out.external_torque = d.torque;
      }
    }
    state_ = dynamics::step(t, state_, std::span<const double>(tau.data(), static_cast<std::size_t>(n)), config_.dt,
                            {wrench, locked_});
  }
  ++steps_;
  refresh_kinematics();

  StepResult result;
  StepInfo computed = info();
  computed.external_force = info_out.external_force;
  computed.external_torque = info_out.external_torque;
  result.info = computed;

  // Rewards. Base adjusters share one reward built from their joint action.
  std::vector<double> base_u, base_prev;
  {
    Eigen::Index at = 0;
    for (const AgentSpec& a : agents_) {
      if (a.role == AgentRole::BaseAdjuster) {
        for (int k = 0; k < a.action_size(); ++k) {
          base_u.push_back(action[at + k]);
          base_prev.push_back(prev_action_[at + k]);
        }
      }
      at += a.action_size();
    }
  }
  const std::span<const double> no_torque;
  const double shared = base_u.empty() ? 0.0
                                       : reward_base(computed.base_error, base_u, base_prev, no_torque,
                                                     computed.collided, config_.reward);
  Eigen::Index at = 0;
  for (const AgentSpec& a : agents_) {
    const auto arm = static_cast<std::size_t>(a.arm);
    const std::span<const double> u(action.data() + at, static_cast<std::size_t>(a.action_size()));
    const std::span<const double> u_prev(prev_action_.data() + at, static_cast<std::size_t>(a.action_size()));
    double r = shared;
    if (a.role == AgentRole::PositionReacher) {
      r = reward_trajectory(goals_.position[arm] - kin_.end_effectors[arm].position, u, u_prev, no_torque,
                            config_.reward);
    } else if (a.role == AgentRole::OrientationReacher) {
      r = reward_trajectory(euler_error(goals_.orientation[arm], ee_euler_[arm]), u, u_prev, no_torque,
                            config_.reward);
    }
    result.rewards.push_back(r);
    at += a.action_size();
  }
  prev_action_ = action;
  result.observations = observations();
  result.done = done();
  return result;
}

StepInfo Environment::info() const {
  StepInfo s;
  for (int arm = 0; arm < tree_->arm_count(); ++arm) {
    const auto k = static_cast<std::size_t>(arm);
    s.position_error.push_back((goals_.position[k] - kin_.end_effectors[k].position).norm());
    s.orientation_error.push_back(euler_error(goals_.orientation[k], ee_euler_[k]).norm());
  }
  s.base_error = euler_error(goals_.base_attitude, base_euler_);
  s.collided = dynamics::check_collision(*tree_, state_).collided;
  s.momentum = dynamics::total_momentum(*tree_, state_);
  s.time = state_.time;
  return s;
}

Eigen::VectorXd Environment::observation(int agent_index) const {
  const AgentSpec& a = agents_.at(static_cast<std::size_t>(agent_index));
  const auto arm = static_cast<std::size_t>(a.arm);
  Eigen::VectorXd z(kObservationSize);
  Eigen::Index at = 0;
  put(z, at, state_.base_position);
  put(z, at, base_euler_);
  put(z, at, state_.base_linear_velocity);
  put(z, at, state_.base_angular_velocity);
  for (int j : a.joints) z[at++] = wrap_angle(state_.q[j]);
  for (int j : a.joints) z[at++] = state_.qdot[j];
  switch (a.role) {
    case AgentRole::PositionReacher:
      put(z, at, kin_.end_effectors[arm].position);
      put(z, at, goals_.position[arm]);
      break;
    case AgentRole::OrientationReacher:
      put(z, at, ee_euler_[arm]);
      put(z, at, wrapped(goals_.orientation[arm]));
      break;
    case AgentRole::BaseAdjuster:
      put(z, at, euler_error(goals_.base_attitude, base_euler_));
      put(z, at, wrapped(goals_.base_attitude));
      break;
  }
  return z;
}

std::vector<Eigen::VectorXd> Environment::observations() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(agents_.size());
  for (int i = 0; i < num_agents(); ++i) out.push_back(observation(i));
  return out;
}

Eigen::VectorXd Environment::global_state() const {
  Eigen::VectorXd s(global_state_size());
  Eigen::Index at = 0;
  put(s, at, state_.base_position);
  put(s, at, base_euler_);
  put(s, at, state_.base_linear_velocity);
  put(s, at, state_.base_angular_velocity);
  for (int j = 0; j < tree_->num_joints(); ++j) s[at++] = wrap_angle(state_.q[j]);
  for (int j = 0; j < tree_->num_joints(); ++j) s[at++] = state_.qdot[j];
  for (int arm = 0; arm < tree_->arm_count(); ++arm) {
    const auto k = static_cast<std::size_t>(arm);
    put(s, at, kin_.end_effectors[k].position);
    put(s, at, goals_.position[k]);
    put(s, at, ee_euler_[k]);
    put(s, at, wrapped(goals_.orientation[k]));
  }
  put(s, at, euler_error(goals_.base_attitude, base_euler_));
  put(s, at, wrapped(goals_.base_attitude));
  s[at++] = static_cast<double>(steps_) / config_.task.episode_length;
  return s;
}

}  // namespace octo::env
