#include "octo/dynamics/kinematic_tree.hpp"

#include <cmath>
#include <string>

#include "octo/common/errors.hpp"

namespace octo::dynamics {

void SpatialInertia::validate(std::string_view what) const {
  const std::string name(what);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ConfigurationError(name + ": mass must be positive");
  }
  if (!com_offset.allFinite() || !rotational_inertia.allFinite()) {
    throw ConfigurationError(name + ": non-finite inertia parameters");
  }
  const Mat3& inertia = rotational_inertia;
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + inertia.cwiseAbs().maxCoeff())) {
    throw ConfigurationError(name + ": rotational inertia is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  const Vec3 principal = eig.eigenvalues();
  if (!(principal.minCoeff() > 0.0)) {
    throw ConfigurationError(name + ": rotational inertia is not positive definite");
  }
  const double slack = 1e-12 * principal.sum();
  for (int i = 0; i < 3; ++i) {
    if (principal.sum() - principal[i] + slack < principal[i]) {
      throw ConfigurationError(name + ": principal moments violate the triangle inequality");
    }
  }
}

KinematicTree::KinematicTree(BaseBody base, std::vector<Link> links, JointLimits limits,
                             std::vector<EndEffector> end_effectors, int model_version)
    : base_(std::move(base)),
      links_(std::move(links)),
      limits_(std::move(limits)),
      end_effectors_(std::move(end_effectors)),
      model_version_(model_version) {
  base_.inertia.validate("base");
  if (!(base_.half_extents.array() > 0.0).all()) {
    throw ConfigurationError("base: half extents must be positive");
  }
  const auto n = static_cast<Eigen::Index>(links_.size());
  if (limits_.q_max.size() != n || limits_.qdot_max.size() != n || limits_.tau_max.size() != n) {
    throw ConfigurationError("joint limits: lengths must equal the joint count");
  }
  if (n > 0 && (!(limits_.q_max.array() > 0.0).all() || !(limits_.qdot_max.array() > 0.0).all() ||
                !(limits_.tau_max.array() > 0.0).all())) {
    throw ConfigurationError("joint limits: all limits must be strictly positive");
  }

  arm_joints_.assign(end_effectors_.size(), {});
  total_mass_ = base_.inertia.mass;
  spatial_inertia_.push_back(base_.inertia.spatial());
  for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
    Link& l = links_[static_cast<std::size_t>(i)];
    const std::string name = "link " + std::to_string(i);
    if (l.parent < -1 || l.parent >= i) {
      throw ConfigurationError(name + ": parent index must precede the link");
    }
    if (std::abs(l.axis.norm() - 1.0) > 1e-9) {
      throw ConfigurationError(name + ": joint axis must be unit norm");
    }
    l.inertia.validate(name);
    if (l.capsule.radius < 0.0 || l.capsule.length < 0.0) {
      throw ConfigurationError(name + ": capsule size must be non-negative");
    }
    if (l.arm < 0 || l.arm >= static_cast<int>(end_effectors_.size())) {
      throw ConfigurationError(name + ": arm index out of range");
    }
    if (l.parent >= 0 && links_[static_cast<std::size_t>(l.parent)].arm != l.arm) {
      throw ConfigurationError(name + ": a chain may not change arms");
    }
    arm_joints_[static_cast<std::size_t>(l.arm)].push_back(i);
    total_mass_ += l.inertia.mass;
    spatial_inertia_.push_back(l.inertia.spatial());
  }
  for (std::size_t k = 0; k < end_effectors_.size(); ++k) {
    const EndEffector& ee = end_effectors_[k];
    if (ee.link < 0 || ee.link >= static_cast<int>(links_.size()) ||
        links_[static_cast<std::size_t>(ee.link)].arm != static_cast<int>(k)) {
      throw ConfigurationError("end effector " + std::to_string(k) + ": must sit on a link of its arm");
    }
  }
}

SystemState SystemState::at_rest(const KinematicTree& tree) {
  SystemState s;
  s.q = Eigen::VectorXd::Zero(tree.num_joints());
  s.qdot = Eigen::VectorXd::Zero(tree.num_joints());
  return s;
}

void SystemState::check_dimensions(const KinematicTree& tree) const {
  if (q.size() != tree.num_joints() || qdot.size() != tree.num_joints()) {
    throw ConfigurationError("state has " + std::to_string(q.size()) + " joint angles and " +
                             std::to_string(qdot.size()) + " joint velocities, tree has " +
                             std::to_string(tree.num_joints()) + " joints");
  }
}

}  // namespace octo::dynamics
