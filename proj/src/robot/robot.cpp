#include "octo/robot/robot.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "octo/common/errors.hpp"
#include "octo/dynamics/dynamics.hpp"

namespace octo::robot {

namespace {

Mat3 diag(double x, double y, double z) { return Vec3(x, y, z).asDiagonal(); }

Mat3 rotation_z(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

}  // namespace

std::string_view face_name(Face face) {
  switch (face) {
    case Face::PosX: return "+x";
    case Face::PosY: return "+y";
    case Face::NegX: return "-x";
    case Face::NegY: return "-y";
    case Face::PosZ: return "+z";
    case Face::NegZ: return "-z";
  }
  return "?";
}

Face parse_face(std::string_view name) {
  for (Face f : {Face::PosX, Face::PosY, Face::NegX, Face::NegY, Face::PosZ, Face::NegZ}) {
    if (face_name(f) == name) return f;
  }
  throw ConfigurationError("unknown base face '" + std::string(name) + "'");
}

MountPose mount_pose(Face face, double half_extent) {
  // Lateral mounts are 90 degree turns of the +x mount about the base z axis,
  // so the default layouts are rotationally symmetric.
  Mat3 pos_x;
  pos_x.col(0) = -Vec3::UnitZ();
  pos_x.col(1) = Vec3::UnitY();
  pos_x.col(2) = Vec3::UnitX();
  MountPose m;
  switch (face) {
    case Face::PosX: m.rotation = pos_x; break;
    case Face::PosY: m.rotation = rotation_z(std::numbers::pi / 2) * pos_x; break;
    case Face::NegX: m.rotation = rotation_z(std::numbers::pi) * pos_x; break;
    case Face::NegY: m.rotation = rotation_z(-std::numbers::pi / 2) * pos_x; break;
    case Face::PosZ: m.rotation = Mat3::Identity(); break;
    case Face::NegZ:
      m.rotation.col(0) = -Vec3::UnitX();
      m.rotation.col(1) = Vec3::UnitY();
      m.rotation.col(2) = -Vec3::UnitZ();
      break;
  }
  // Snap the round-off from the trigonometric turns.
  m.rotation = m.rotation.unaryExpr([](double v) { return std::round(v); });
  m.position = half_extent * m.rotation.col(2);
  return m;
}

std::vector<LinkParams> ur5_like_links() {
  std::vector<LinkParams> t(6);
  // shoulder pan
  t[0].axis = Vec3::UnitZ();
  t[0].origin = Vec3::Zero();
  t[0].mass = 3.7;
  t[0].com = Vec3(0, 0, 0.0446);
  t[0].inertia = diag(0.0103, 0.0103, 0.0067);
  t[0].capsule_radius = 0.06;
  t[0].capsule_length = 0.089159;
  t[0].capsule_direction = Vec3::UnitZ();
  // shoulder lift, upper arm points out along the mount normal at q = 0
  t[1].axis = Vec3::UnitX();
  t[1].origin = Vec3(0, 0, 0.089159);
  t[1].mass = 8.393;
  t[1].com = Vec3(0, 0, 0.2125);
  t[1].inertia = diag(0.1338, 0.1338, 0.0151);
  t[1].capsule_radius = 0.054;
  t[1].capsule_length = 0.425;
  t[1].capsule_direction = Vec3::UnitZ();
  // elbow, forearm bent 90 degrees at q = 0
  t[2].axis = Vec3::UnitX();
  t[2].origin = Vec3(0, 0, 0.425);
  t[2].mass = 2.275;
  t[2].com = Vec3(0, 0.196, 0);
  t[2].inertia = diag(0.0312, 0.0041, 0.0312);
  t[2].capsule_radius = 0.045;
  t[2].capsule_length = 0.39225;
  t[2].capsule_direction = Vec3::UnitY();
  // wrist 1
  t[3].axis = Vec3::UnitX();
  t[3].origin = Vec3(0, 0.39225, 0);
  t[3].mass = 1.219;
  t[3].com = Vec3(0, 0.047, 0);
  t[3].inertia = diag(0.00222, 0.00219, 0.00222);
  t[3].capsule_radius = 0.04;
  t[3].capsule_length = 0.09465;
  t[3].capsule_direction = Vec3::UnitY();
  // wrist 2
  t[4].axis = Vec3::UnitZ();
  t[4].origin = Vec3(0, 0.09465, 0);
  t[4].mass = 1.219;
  t[4].com = Vec3(0, 0.041, 0);
  t[4].inertia = diag(0.00222, 0.00219, 0.00222);
  t[4].capsule_radius = 0.04;
  t[4].capsule_length = 0.0823;
  t[4].capsule_direction = Vec3::UnitY();
  // wrist 3 / flange
  t[5].axis = Vec3::UnitY();
  t[5].origin = Vec3(0, 0.0823, 0);
  t[5].mass = 0.1879;
  t[5].com = Vec3(0, 0.02, 0);
  t[5].inertia = diag(0.0001, 0.000132, 0.0001);
  t[5].capsule_radius = 0.035;
  t[5].capsule_length = 0.05;
  t[5].capsule_direction = Vec3::UnitY();

  const double big_torque = 150.0;
  const double wrist_torque = 28.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].q_max = 2.0 * std::numbers::pi;
    t[i].qdot_max = std::numbers::pi;
    t[i].tau_max = i < 3 ? big_torque : wrist_torque;
  }
  return t;
}

RobotConfig preset(std::string_view name) {
  RobotConfig c;
  c.name = std::string(name);
  c.base_mass = 400.0;
  c.base_half_extent = 0.8726 / 2.0;
  std::vector<LinkParams> table = ur5_like_links();
  if (name == "full4") {
    c.arm_count = 4;
    c.joints_per_arm = 6;
    c.faces = {Face::PosX, Face::PosY, Face::NegX, Face::NegY};
    c.links = table;
    c.tool_offset = Vec3(0, 0.05, 0);
  } else if (name == "desk2") {
    c.arm_count = 2;
    c.joints_per_arm = 3;
    c.faces = {Face::PosX, Face::NegX};
    // Desk scale: a lighter base, and the second arm turned about its normal
    // so the two shoulders span all three base axes at home.
    c.base_mass = 100.0;
    c.mount_roll = {0.0, std::numbers::pi / 2};
    c.links.assign(table.begin(), table.begin() + 3);
    c.tool_offset = Vec3(0, table[3].origin.y(), 0);
  } else {
    throw ConfigurationError("unknown robot preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"full4", "desk2"}; }

void RobotConfig::validate() const {
  if (arm_count < 1) throw ConfigurationError("arm_count must be at least 1");
  if (joints_per_arm != 3 && joints_per_arm != 6) {
    throw ConfigurationError("joints_per_arm must be 3 or 6");
  }
  if (static_cast<int>(links.size()) != joints_per_arm) {
    throw ConfigurationError("link table has " + std::to_string(links.size()) + " rows, joints_per_arm is " +
                             std::to_string(joints_per_arm));
  }
  if (static_cast<int>(faces.size()) != arm_count) {
    throw ConfigurationError("mount face list has " + std::to_string(faces.size()) + " entries, arm_count is " +
                             std::to_string(arm_count));
  }
  if (std::set<Face>(faces.begin(), faces.end()).size() != faces.size()) {
    throw ConfigurationError("arms must be mounted on distinct faces");
  }
  if (!mount_roll.empty() && static_cast<int>(mount_roll.size()) != arm_count) {
    throw ConfigurationError("mount_roll has " + std::to_string(mount_roll.size()) + " entries, arm_count is " +
                             std::to_string(arm_count));
  }
  for (double r : mount_roll) {
    if (!std::isfinite(r)) throw ConfigurationError("mount_roll must be finite");
  }
  if (!(base_mass > 0.0) || !(base_half_extent > 0.0)) {
    throw ConfigurationError("base mass and size must be positive");
  }
}

dynamics::KinematicTree build_space_robot(const RobotConfig& config) {
  config.validate();
  using dynamics::Link;
  dynamics::BaseBody base;
  base.inertia.mass = config.base_mass;
  const double edge = 2.0 * config.base_half_extent;
  base.inertia.rotational_inertia = Mat3::Identity() * (config.base_mass * edge * edge / 6.0);
  base.half_extents = Vec3::Constant(config.base_half_extent);

  std::vector<Link> links;
  std::vector<dynamics::EndEffector> tools;
  const auto n = static_cast<Eigen::Index>(config.arm_count * config.joints_per_arm);
  dynamics::JointLimits limits{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int arm = 0; arm < config.arm_count; ++arm) {
    MountPose mount = mount_pose(config.faces[static_cast<std::size_t>(arm)], config.base_half_extent);
    if (!config.mount_roll.empty()) {
      mount.rotation = mount.rotation * rotation_z(config.mount_roll[static_cast<std::size_t>(arm)]);
    }
    for (int j = 0; j < config.joints_per_arm; ++j) {
      const LinkParams& p = config.links[static_cast<std::size_t>(j)];
      Link l;
      l.arm = arm;
      l.axis = p.axis.normalized();
      if (j == 0) {
        l.parent = -1;
        l.origin = mount.position + mount.rotation * p.origin;
        l.origin_rotation = mount.rotation;
      } else {
        l.parent = static_cast<int>(links.size()) - 1;
        l.origin = p.origin;
      }
      l.inertia.mass = p.mass;
      l.inertia.com_offset = p.com;
      l.inertia.rotational_inertia = p.inertia;
      l.capsule = {p.capsule_radius, p.capsule_length, p.capsule_direction.normalized()};
      const auto idx = static_cast<Eigen::Index>(links.size());
      limits.q_max[idx] = p.q_max;
      limits.qdot_max[idx] = p.qdot_max;
      limits.tau_max[idx] = p.tau_max;
      links.push_back(l);
    }
    // Tool frame chosen so the end effector is world-aligned at the home pose,
    // which keeps its Euler angles far from the XYZ gimbal singularity.
    dynamics::EndEffector tool;
    tool.link = static_cast<int>(links.size()) - 1;
    tool.offset = config.tool_offset;
    tool.rotation = mount.rotation.transpose();
    tools.push_back(tool);
  }
  return dynamics::KinematicTree(base, std::move(links), std::move(limits), std::move(tools),
                                 config.model_version);
}

AxisAlignedBox default_targets_volume(const dynamics::KinematicTree& tree, int arm) {
  if (arm < 0 || arm >= tree.arm_count()) {
    throw ConfigurationError("arm index " + std::to_string(arm) + " out of range");
  }
  const auto kin = dynamics::forward_kinematics(tree, dynamics::SystemState::at_rest(tree));
  return {kin.end_effectors[static_cast<std::size_t>(arm)].position, Vec3::Constant(0.15)};
}

double arm_reach(const RobotConfig& config) {
  double reach = 0.0;
  for (std::size_t j = 1; j < config.links.size(); ++j) reach += config.links[j].origin.norm();
  return reach + config.links.front().origin.norm() + config.tool_offset.norm();
}

}  // namespace octo::robot
