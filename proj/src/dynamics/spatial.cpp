#include "octo/dynamics/spatial.hpp"

namespace octo::dynamics {

Quat integrate_orientation(const Quat& q, const Vec3& world_angular_velocity, double dt) {
  const Vec3 rotation_vector = world_angular_velocity * dt;
  const double angle = rotation_vector.norm();
  if (angle == 0.0) return q.normalized();
  const Quat delta(Eigen::AngleAxisd(angle, rotation_vector / angle));
  return (delta * q).normalized();
}

}  // namespace octo::dynamics
