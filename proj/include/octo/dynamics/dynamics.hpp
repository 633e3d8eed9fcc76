#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "octo/dynamics/kinematic_tree.hpp"

namespace octo::dynamics {

struct BodyPose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

struct Kinematics {
  std::vector<BodyPose> bodies;         // base first, then links
  std::vector<BodyPose> end_effectors;  // one per arm
};

/// World-frame twist of a body: angular velocity and velocity of its origin.
struct BodyTwist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();
};

/// External force/torque on one body, world frame. The force acts at the
/// body's centre of mass.
struct ExternalWrench {
  int body = 0;
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

struct Accelerations {
  Vec3 base_linear = Vec3::Zero();   // m/s^2, base origin, world frame
  Vec3 base_angular = Vec3::Zero();  // rad/s^2, world frame
  Eigen::VectorXd qddot;
};

struct Momentum {
  Vec3 linear = Vec3::Zero();   // kg m/s
  Vec3 angular = Vec3::Zero();  // kg m^2/s about the system centre of mass
};

/// Optional inputs shared by forward_dynamics and step. `locked` has one
/// entry per joint (nonzero = joint held rigid by its brake) or is empty.
struct DynamicsInputs {
  std::span<const ExternalWrench> wrenches = {};
  std::span<const std::uint8_t> locked = {};
};

Kinematics forward_kinematics(const KinematicTree& tree, const SystemState& state);
std::vector<BodyTwist> body_twists(const KinematicTree& tree, const SystemState& state);

/// Floating-base articulated-body algorithm, zero gravity. Torques are
/// clamped to the tree's limits.
Accelerations forward_dynamics(const KinematicTree& tree, const SystemState& state,
                               std::span<const double> joint_torques, DynamicsInputs inputs = {});

/// Recursive Newton-Euler. Returns the generalized force vector
/// [base torque about base origin (3), base force (3), joint torques (n)],
/// world frame, that produces the given accelerations.
Eigen::VectorXd inverse_dynamics(const KinematicTree& tree, const SystemState& state,
                                 const Accelerations& accelerations,
                                 std::span<const ExternalWrench> wrenches = {});

/// One semi-implicit Euler step: velocities first, then positions, then
/// joint clamping. The base twist is finally re-solved so that the spatial
/// momentum equals its previous value plus the external impulse, which keeps
/// the floating system's momentum exact to round-off.
SystemState step(const KinematicTree& tree, const SystemState& state,
                 std::span<const double> joint_torques, double dt, DynamicsInputs inputs = {});

/// Sum of per-body momenta in world frame; angular part is about the system
/// centre of mass.
Momentum total_momentum(const KinematicTree& tree, const SystemState& state);
Vec3 center_of_mass(const KinematicTree& tree, const SystemState& state);

}  // namespace octo::dynamics
