#pragma once

#include <string_view>
#include <vector>

#include "octo/dynamics/spatial.hpp"

namespace octo::dynamics {

struct SpatialInertia {
  double mass = 1.0;                          // kg
  Vec3 com_offset = Vec3::Zero();             // m, body frame
  Mat3 rotational_inertia = Mat3::Identity(); // kg m^2 about the COM

  /// Throws ConfigurationError unless mass > 0 and the inertia tensor is
  /// symmetric positive definite and satisfies the triangle inequality.
  void validate(std::string_view what) const;
  Mat6 spatial() const { return rigid_body_inertia(mass, com_offset, rotational_inertia); }
};

/// Collision segment starting at the body origin, swept by `radius`.
struct Capsule {
  double radius = 0.0;
  double length = 0.0;
  Vec3 direction = Vec3::UnitZ();
};

struct JointLimits {
  Eigen::VectorXd q_max;     // rad
  Eigen::VectorXd qdot_max;  // rad/s
  Eigen::VectorXd tau_max;   // N m
};

/// One revolute joint plus the body it moves. The joint frame sits at
/// `origin` in the parent body's frame with orientation `origin_rotation`;
/// the body frame is the joint frame rotated by q about `axis`.
struct Link {
  int parent = -1;  // -1 = base, otherwise index of an earlier link
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
  Mat3 origin_rotation = Mat3::Identity();
  SpatialInertia inertia;
  Capsule capsule;
  int arm = 0;
};

/// Tool frame attached to the last link of an arm.
struct EndEffector {
  int link = 0;
  Vec3 offset = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

struct BaseBody {
  SpatialInertia inertia;
  Vec3 half_extents = Vec3::Constant(0.5);  // m, collision box
};

/// Floating base plus revolute chains. Immutable after construction; the
/// constructor enforces topological order, unit axes and positive limits.
class KinematicTree {
 public:
  KinematicTree(BaseBody base, std::vector<Link> links, JointLimits limits,
                std::vector<EndEffector> end_effectors, int model_version = 1);

  const BaseBody& base() const { return base_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int i) const { return links_[static_cast<std::size_t>(i)]; }
  const JointLimits& limits() const { return limits_; }
  const std::vector<EndEffector>& end_effectors() const { return end_effectors_; }

  int num_joints() const { return static_cast<int>(links_.size()); }
  /// Base is body 0; link i is body i + 1.
  int num_bodies() const { return num_joints() + 1; }
  int arm_count() const { return static_cast<int>(end_effectors_.size()); }
  /// Link indices of arm k in chain order.
  const std::vector<int>& arm_joints(int arm) const { return arm_joints_[static_cast<std::size_t>(arm)]; }
  double total_mass() const { return total_mass_; }
  /// Spatial inertia of body b (base = 0) about its frame origin.
  const Mat6& body_spatial_inertia(int body) const { return spatial_inertia_[static_cast<std::size_t>(body)]; }
  int model_version() const { return model_version_; }

 private:
  BaseBody base_;
  std::vector<Link> links_;
  JointLimits limits_;
  std::vector<EndEffector> end_effectors_;
  std::vector<std::vector<int>> arm_joints_;
  std::vector<Mat6> spatial_inertia_;
  double total_mass_ = 0.0;
  int model_version_ = 1;
};

/// Ground-truth state of the floating system. Base twist is in world frame;
/// the linear velocity is that of the base frame origin.
struct SystemState {
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  Vec3 base_linear_velocity = Vec3::Zero();
  Vec3 base_angular_velocity = Vec3::Zero();
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  double time = 0.0;

  static SystemState at_rest(const KinematicTree& tree);
  /// Throws ConfigurationError if joint vectors do not match the tree.
  void check_dimensions(const KinematicTree& tree) const;
};

}  // namespace octo::dynamics
