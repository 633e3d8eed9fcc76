#include "octo/dynamics/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace octo::dynamics {

double segment_box_distance(const Segment& segment, const OrientedBox& box) {
  // In box coordinates the squared distance from P(t) = a + t d to the box is
  // sum_k excess_k(t)^2 with excess_k = max(0, |P_k| - h_k). Between the
  // parameters where some |P_k(t)| crosses h_k the function is one quadratic,
  // so minimizing it exactly on each piece gives the global minimum.
  const Vec3 a = box.rotation.transpose() * (segment.start - box.center);
  const Vec3 b = box.rotation.transpose() * (segment.end - box.center);
  const Vec3 d = b - a;
  const Vec3& h = box.half_extents;

  std::array<double, 8> breaks{};
  std::size_t count = 0;
  breaks[count++] = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) continue;
    for (double s : {h[k], -h[k]}) {
      const double t = (s - a[k]) / d[k];
      if (t > 0.0 && t < 1.0) breaks[count++] = t;
    }
  }
  breaks[count++] = 1.0;
  std::sort(breaks.begin(), breaks.begin() + static_cast<std::ptrdiff_t>(count));

  auto squared = [&](double t) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double p = a[k] + t * d[k];
      const double e = std::max(0.0, std::abs(p) - h[k]);
      sum += e * e;
    }
    return sum;
  };

  double best = std::min(squared(0.0), squared(1.0));
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const double lo = breaks[i];
    const double hi = breaks[i + 1];
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    // On this piece excess_k(t) is 0 or sign_k * (a_k + t d_k) - h_k.
    double quad = 0.0;
    double lin = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double p = a[k] + mid * d[k];
      if (std::abs(p) <= h[k]) continue;
      const double sign = p > 0.0 ? 1.0 : -1.0;
      const double offset = sign * a[k] - h[k];
      const double slope = sign * d[k];
      quad += slope * slope;
      lin += slope * offset;
    }
    if (quad > 0.0) {
      const double t = std::clamp(-lin / quad, lo, hi);
      best = std::min(best, squared(t));
    }
    best = std::min(best, squared(mid));
  }
  return std::sqrt(best);
}

double segment_segment_distance(const Segment& s1, const Segment& s2) {
  const Vec3 d1 = s1.end - s1.start;
  const Vec3 d2 = s2.end - s2.start;
  const Vec3 r = s1.start - s2.start;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= 0.0 && e <= 0.0) return r.norm();
  if (a <= 0.0) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 0.0) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((s1.start + s * d1) - (s2.start + t * d2)).norm();
}

Segment link_segment(const KinematicTree& tree, const Kinematics& kin, int link) {
  const Capsule& cap = tree.link(link).capsule;
  const BodyPose& pose = kin.bodies[static_cast<std::size_t>(link + 1)];
  return {pose.position, pose.position + pose.orientation * (cap.direction * cap.length)};
}

CollisionResult check_collision(const KinematicTree& tree, const SystemState& state) {
  const Kinematics kin = forward_kinematics(tree, state);
  const int n = tree.num_joints();
  std::vector<Segment> segments;
  segments.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) segments.push_back(link_segment(tree, kin, i));

  OrientedBox base;
  base.center = kin.bodies[0].position;
  base.rotation = kin.bodies[0].orientation.toRotationMatrix();
  base.half_extents = tree.base().half_extents;
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    if (link.parent < 0) continue;
    if (segment_box_distance(segments[static_cast<std::size_t>(i)], base) < link.capsule.radius) {
      return {true, 0, i + 1};
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (tree.link(i).arm == tree.link(j).arm) continue;
      const double reach = tree.link(i).capsule.radius + tree.link(j).capsule.radius;
      if (segment_segment_distance(segments[static_cast<std::size_t>(i)], segments[static_cast<std::size_t>(j)]) <
          reach) {
        return {true, i + 1, j + 1};
      }
    }
  }
  return {};
}

}  // namespace octo::dynamics
