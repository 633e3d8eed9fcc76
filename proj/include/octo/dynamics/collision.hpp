#pragma once

#include "octo/dynamics/dynamics.hpp"

namespace octo::dynamics {

struct Segment {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();  // box axes in world
  Vec3 half_extents = Vec3::Constant(0.5);
};

/// Exact Euclidean distance between a segment and a solid box (0 when they
/// overlap).
double segment_box_distance(const Segment& segment, const OrientedBox& box);

/// Distance between two segments (closest-point construction).
double segment_segment_distance(const Segment& a, const Segment& b);

struct CollisionResult {
  bool collided = false;
  int body_a = -1;  // lower body index of the first offending pair
  int body_b = -1;
};

/// Capsules of links not attached directly to the base are tested against the
/// base box; capsules on different arms are tested against each other.
/// Touching at exactly the combined radius is not a collision. Pairs are
/// scanned in lexicographic body order, so the reported pair is deterministic.
CollisionResult check_collision(const KinematicTree& tree, const SystemState& state);

/// World-frame collision segment of link i at the given kinematics.
Segment link_segment(const KinematicTree& tree, const Kinematics& kin, int link);

}  // namespace octo::dynamics
