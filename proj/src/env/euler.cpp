#include "octo/env/euler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace octo::env {

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double wrapped = angle - two_pi * std::ceil((angle - std::numbers::pi) / two_pi);
  // ceil() can land one period off when angle - pi rounds onto a multiple.
  if (wrapped <= -std::numbers::pi) return wrapped + two_pi;
  if (wrapped > std::numbers::pi) return wrapped - two_pi;
  return wrapped;
}

Vec3 euler_xyz(const Mat3& r) {
  const double b = std::asin(std::clamp(r(0, 2), -1.0, 1.0));
  const double a = std::atan2(-r(1, 2), r(2, 2));
  const double c = std::atan2(-r(0, 1), r(0, 0));
  return {wrap_angle(a), wrap_angle(b), wrap_angle(c)};
}

Vec3 euler_xyz(const Quat& orientation) { return euler_xyz(orientation.toRotationMatrix()); }

Quat quat_from_euler_xyz(const Vec3& angles) {
  return Quat(Eigen::AngleAxisd(angles.x(), Vec3::UnitX()) * Eigen::AngleAxisd(angles.y(), Vec3::UnitY()) *
              Eigen::AngleAxisd(angles.z(), Vec3::UnitZ()));
}

Vec3 euler_error(const Vec3& desired, const Vec3& current) {
  return {wrap_angle(desired.x() - current.x()), wrap_angle(desired.y() - current.y()),
          wrap_angle(desired.z() - current.z())};
}

}  // namespace octo::env
