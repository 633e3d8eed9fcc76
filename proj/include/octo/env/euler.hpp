#pragma once

#include "octo/dynamics/spatial.hpp"

namespace octo::env {

using dynamics::Mat3;
using dynamics::Quat;
using dynamics::Vec3;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Intrinsic X-Y-Z Euler angles (a, b, c) with R = Rx(a) Ry(b) Rz(c).
/// Each angle is wrapped into (-pi, pi]; b lies in [-pi/2, pi/2].
Vec3 euler_xyz(const Mat3& rotation);
Vec3 euler_xyz(const Quat& orientation);
Quat quat_from_euler_xyz(const Vec3& angles);

/// desired - current, componentwise, each wrapped into (-pi, pi].
Vec3 euler_error(const Vec3& desired, const Vec3& current);

}  // namespace octo::env
