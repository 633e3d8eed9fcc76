#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "octo/dynamics/kinematic_tree.hpp"

namespace octo::robot {

using dynamics::Mat3;
using dynamics::Vec3;

/// Base face an arm is mounted on. Lateral faces are listed first.
enum class Face { PosX, PosY, NegX, NegY, PosZ, NegZ };

std::string_view face_name(Face face);
Face parse_face(std::string_view name);

/// One row of the arm parameter table. Geometry is expressed in the parent
/// link's body frame (the mount frame for the first joint).
struct LinkParams {
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
  double mass = 1.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Identity();  // about the COM
  double capsule_radius = 0.0;
  double capsule_length = 0.0;
  Vec3 capsule_direction = Vec3::UnitZ();
  double q_max = 0.0;
  double qdot_max = 0.0;
  double tau_max = 0.0;
};

struct RobotConfig {
  std::string name = "custom";
  int model_version = 1;
  /// Parameters resemble a real arm but are not measured values.
  bool representative = true;
  double base_mass = 400.0;        // kg
  double base_half_extent = 0.4363;  // m, cube
  int arm_count = 4;
  int joints_per_arm = 6;
  std::vector<Face> faces;
  /// Per-arm turn of the mount about its face normal, rad. Empty = none.
  std::vector<double> mount_roll;
  std::vector<LinkParams> links;  // one row per joint of an arm
  Vec3 tool_offset = Vec3::Zero();  // in the last link's frame

  /// Throws ConfigurationError on inconsistent table lengths, bad counts or
  /// shared faces.
  void validate() const;
};

/// Mount frame of a face: z along the outward normal, origin at the face
/// centre, expressed in base coordinates.
struct MountPose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};
MountPose mount_pose(Face face, double half_extent);

/// Representative 6-DoF UR5-like parameter table (masses and link lengths
/// from the public datasheet, inertias from cylinder approximations).
std::vector<LinkParams> ur5_like_links();

/// Named presets: "full4" (four 6-DoF arms) and "desk2" (two 3-DoF arms).
RobotConfig preset(std::string_view name);
std::vector<std::string> preset_names();

dynamics::KinematicTree build_space_robot(const RobotConfig& config);

struct AxisAlignedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return ((p - center).cwiseAbs().array() <= half_extents.array()).all();
  }
};

/// 0.3 m target cube in front of an arm, world frame with the base at its
/// initial pose. Centred on the arm's home end-effector position.
AxisAlignedBox default_targets_volume(const dynamics::KinematicTree& tree, int arm);

/// Sum of link lengths of an arm (upper bound on its reach from the mount).
double arm_reach(const RobotConfig& config);

// Model file (JSON) ---------------------------------------------------------

RobotConfig config_from_json_text(std::string_view text);
std::string config_to_json_text(const RobotConfig& config);
RobotConfig load_robot_config(const std::string& path);
void save_robot_config(const RobotConfig& config, const std::string& path);
/// Fingerprint of the canonical JSON form.
std::uint64_t config_hash(const RobotConfig& config);

}  // namespace octo::robot
