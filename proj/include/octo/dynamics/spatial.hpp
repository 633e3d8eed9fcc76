#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

// Spatial (6D) vector algebra in Plücker coordinates. Motion vectors are laid
// out as [angular; linear], force vectors as [moment; force].

namespace octo::dynamics {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Coordinate transform from frame A to frame B. `rotation` maps A
/// coordinates to B coordinates; `translation` is B's origin in A coordinates.
struct PluckerTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec6 apply_motion(const Vec6& m) const {
    Vec6 out;
    out.head<3>() = rotation * m.head<3>();
    out.tail<3>() = rotation * (m.tail<3>() - translation.cross(m.head<3>()));
    return out;
  }

  Vec6 apply_force(const Vec6& f) const {
    Vec6 out;
    out.head<3>() = rotation * (f.head<3>() - translation.cross(f.tail<3>()));
    out.tail<3>() = rotation * f.tail<3>();
    return out;
  }

  /// X^T applied to a force expressed in B: returns the same force in A.
  Vec6 transpose_force(const Vec6& f) const {
    Vec6 out;
    out.tail<3>() = rotation.transpose() * f.tail<3>();
    out.head<3>() = rotation.transpose() * f.head<3>() + translation.cross(out.tail<3>());
    return out;
  }

  /// 6x6 motion-transform matrix.
  Mat6 matrix() const {
    Mat6 x = Mat6::Zero();
    x.topLeftCorner<3, 3>() = rotation;
    x.bottomRightCorner<3, 3>() = rotation;
    x.bottomLeftCorner<3, 3>() = -rotation * skew(translation);
    return x;
  }
};

/// X^T I X for a symmetric spatial inertia I expressed in X's target frame,
/// i.e. the same inertia expressed in X's source frame. Works on 3x3 blocks.
inline Mat6 congruence(const PluckerTransform& x, const Mat6& inertia) {
  const Mat3& e = x.rotation;
  const Mat3 rx = skew(x.translation);
  const Mat3 a = e.transpose() * inertia.topLeftCorner<3, 3>() * e;
  const Mat3 b = e.transpose() * inertia.topRightCorner<3, 3>() * e;
  const Mat3 c = e.transpose() * inertia.bottomRightCorner<3, 3>() * e;
  const Mat3 br = b * rx;
  const Mat3 top_right = b + rx * c;
  Mat6 out;
  out.topLeftCorner<3, 3>() = a - br - br.transpose() - rx * c * rx;
  out.topRightCorner<3, 3>() = top_right;
  out.bottomLeftCorner<3, 3>() = top_right.transpose();
  out.bottomRightCorner<3, 3>() = c;
  return out;
}

/// v x m for motion vectors.
inline Vec6 motion_cross(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

/// v x* f for force vectors.
inline Vec6 force_cross(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

/// Spatial inertia about a body's frame origin, given mass, centre of mass
/// and rotational inertia about the centre of mass (all in body coordinates).
inline Mat6 rigid_body_inertia(double mass, const Vec3& com, const Mat3& inertia_about_com) {
  const Mat3 c = skew(com);
  Mat6 out;
  out.topLeftCorner<3, 3>() = inertia_about_com + mass * c * c.transpose();
  out.topRightCorner<3, 3>() = mass * c;
  out.bottomLeftCorner<3, 3>() = mass * c.transpose();
  out.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return out;
}

/// Rotates q by the world-frame rotation vector omega*dt and renormalizes.
Quat integrate_orientation(const Quat& q, const Vec3& world_angular_velocity, double dt);

}  // namespace octo::dynamics
