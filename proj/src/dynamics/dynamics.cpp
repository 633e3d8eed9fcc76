#include "octo/dynamics/dynamics.hpp"

#include <cmath>
#include <string>

#include "octo/common/errors.hpp"

namespace octo::dynamics {

namespace {

// Scratch describing the tree at one configuration.
struct Frames {
  std::vector<PluckerTransform> parent_to_body;  // per link
  std::vector<Mat3> rotation;                    // per body, body -> world
  std::vector<Vec3> position;                    // per body, world
};

// Reused per-thread buffers; every entry is overwritten before it is read.
struct Workspace {
  Frames frames;
  std::vector<Vec6> v, c, bias, a, U, f_ext, momentum;
  std::vector<Mat6> inertia;
  std::vector<double> D, u;

  void resize(std::size_t bodies) {
    frames.parent_to_body.resize(bodies - 1);
    frames.rotation.resize(bodies);
    frames.position.resize(bodies);
    for (auto* vec : {&v, &c, &bias, &a, &U, &f_ext, &momentum}) vec->resize(bodies);
    inertia.resize(bodies);
    D.resize(bodies);
    u.resize(bodies);
  }
};

Workspace& workspace(const KinematicTree& tree) {
  thread_local Workspace ws;
  ws.resize(static_cast<std::size_t>(tree.num_bodies()));
  return ws;
}

PluckerTransform joint_transform(const Link& link, double q) {
  PluckerTransform x;
  const Mat3 body_in_parent = link.origin_rotation * Eigen::AngleAxisd(q, link.axis).toRotationMatrix();
  x.rotation = body_in_parent.transpose();
  x.translation = link.origin;
  return x;
}

void compute_frames(const KinematicTree& tree, const SystemState& state, Frames& f) {
  const int n = tree.num_joints();
  f.parent_to_body.resize(static_cast<std::size_t>(n));
  f.rotation.resize(static_cast<std::size_t>(n + 1));
  f.position.resize(static_cast<std::size_t>(n + 1));
  f.rotation[0] = state.base_orientation.normalized().toRotationMatrix();
  f.position[0] = state.base_position;
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    const auto p = static_cast<std::size_t>(link.parent + 1);
    f.parent_to_body[static_cast<std::size_t>(i)] = joint_transform(link, state.q[i]);
    f.rotation[b] = f.rotation[p] * f.parent_to_body[static_cast<std::size_t>(i)].rotation.transpose();
    f.position[b] = f.position[p] + f.rotation[p] * link.origin;
  }
}

Frames compute_frames(const KinematicTree& tree, const SystemState& state) {
  Frames f;
  compute_frames(tree, state, f);
  return f;
}

Vec6 motion_axis(const Link& link) {
  Vec6 s = Vec6::Zero();
  s.head<3>() = link.axis;
  return s;
}

Vec6 base_velocity_body(const SystemState& state, const Mat3& base_rotation) {
  Vec6 v;
  v.head<3>() = base_rotation.transpose() * state.base_angular_velocity;
  v.tail<3>() = base_rotation.transpose() * state.base_linear_velocity;
  return v;
}

const SpatialInertia& body_inertia(const KinematicTree& tree, int body) {
  return body == 0 ? tree.base().inertia : tree.link(body - 1).inertia;
}

Vec3 frames_com(const KinematicTree& tree, const Frames& f) {
  Vec3 sum = Vec3::Zero();
  for (int b = 0; b < tree.num_bodies(); ++b) {
    const auto i = static_cast<std::size_t>(b);
    const SpatialInertia& in = body_inertia(tree, b);
    sum += in.mass * (f.position[i] + f.rotation[i] * in.com_offset);
  }
  return sum / tree.total_mass();
}

// External wrenches summed per body, in body coordinates about the body origin.
void external_forces(const KinematicTree& tree, const Frames& frames, std::span<const ExternalWrench> wrenches,
                     std::vector<Vec6>& out) {
  out.assign(static_cast<std::size_t>(tree.num_bodies()), Vec6::Zero());
  for (const ExternalWrench& w : wrenches) {
    if (w.body < 0 || w.body >= tree.num_bodies()) {
      throw ConfigurationError("external wrench on unknown body " + std::to_string(w.body));
    }
    if (!w.force.allFinite() || !w.torque.allFinite()) {
      throw InputError("external wrench is not finite");
    }
    const auto b = static_cast<std::size_t>(w.body);
    const Mat3& r = frames.rotation[b];
    const Vec3 com_world = frames.position[b] + r * body_inertia(tree, w.body).com_offset;
    Vec6 f;
    f.tail<3>() = r.transpose() * w.force;
    f.head<3>() = r.transpose() * (w.torque + (com_world - frames.position[b]).cross(w.force));
    out[b] += f;
  }
}

bool is_locked(std::span<const std::uint8_t> locked, int i) {
  return !locked.empty() && locked[static_cast<std::size_t>(i)] != 0;
}

void check_inputs(const KinematicTree& tree, const SystemState& state, std::span<const double> torques,
                  DynamicsInputs inputs) {
  state.check_dimensions(tree);
  if (torques.size() != static_cast<std::size_t>(tree.num_joints())) {
    throw ConfigurationError("expected " + std::to_string(tree.num_joints()) + " joint torques, got " +
                             std::to_string(torques.size()));
  }
  if (!inputs.locked.empty() && inputs.locked.size() != static_cast<std::size_t>(tree.num_joints())) {
    throw ConfigurationError("locked-joint mask length does not match the joint count");
  }
  for (double t : torques) {
    if (!std::isfinite(t)) throw InputError("joint torque is not finite");
  }
}

// Spatial momentum of the system in base coordinates about the base origin.
// With `include_base` false the base twist is taken as zero, which leaves the
// part carried by the joint velocities alone.
Vec6 momentum_in_base(const KinematicTree& tree, const SystemState& state, Workspace& ws, bool include_base) {
  const int n = tree.num_joints();
  const Frames& frames = ws.frames;
  ws.v[0] = include_base ? base_velocity_body(state, frames.rotation[0]) : Vec6::Zero();
  ws.momentum[0] = tree.body_spatial_inertia(0) * ws.v[0];
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    ws.v[b] = frames.parent_to_body[static_cast<std::size_t>(i)].apply_motion(ws.v[static_cast<std::size_t>(link.parent + 1)]) +
              motion_axis(link) * state.qdot[i];
    ws.momentum[b] = tree.body_spatial_inertia(i + 1) * ws.v[b];
  }
  for (int i = n - 1; i >= 0; --i) {
    const auto b = static_cast<std::size_t>(i + 1);
    ws.momentum[static_cast<std::size_t>(tree.link(i).parent + 1)] +=
        frames.parent_to_body[static_cast<std::size_t>(i)].transpose_force(ws.momentum[b]);
  }
  return ws.momentum[0];
}

// Composite rigid-body inertia of the whole system in base coordinates.
Mat6 composite_inertia(const KinematicTree& tree, Workspace& ws) {
  const int n = tree.num_joints();
  for (int b = 0; b <= n; ++b) ws.inertia[static_cast<std::size_t>(b)] = tree.body_spatial_inertia(b);
  for (int i = n - 1; i >= 0; --i) {
    const auto b = static_cast<std::size_t>(i + 1);
    ws.inertia[static_cast<std::size_t>(tree.link(i).parent + 1)] +=
        congruence(ws.frames.parent_to_body[static_cast<std::size_t>(i)], ws.inertia[b]);
  }
  return ws.inertia[0];
}

PluckerTransform world_to_base(const Frames& frames) {
  PluckerTransform x;
  x.rotation = frames.rotation[0].transpose();
  x.translation = frames.position[0];
  return x;
}

// Articulated-body algorithm on the frames already stored in `ws`.
Accelerations articulated_body(const KinematicTree& tree, const SystemState& state,
                               std::span<const double> joint_torques, DynamicsInputs inputs, Workspace& ws) {
  const int n = tree.num_joints();
  const Frames& frames = ws.frames;
  external_forces(tree, frames, inputs.wrenches, ws.f_ext);
  auto& v = ws.v;
  auto& c = ws.c;
  auto& bias = ws.bias;
  auto& a = ws.a;
  auto& U = ws.U;
  auto& inertia = ws.inertia;
  auto& D = ws.D;
  auto& u = ws.u;

  v[0] = base_velocity_body(state, frames.rotation[0]);
  inertia[0] = tree.body_spatial_inertia(0);
  bias[0] = force_cross(v[0], inertia[0] * v[0]) - ws.f_ext[0];
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    const Vec6 vj = motion_axis(link) * state.qdot[i];
    v[b] = frames.parent_to_body[static_cast<std::size_t>(i)].apply_motion(v[static_cast<std::size_t>(link.parent + 1)]) + vj;
    c[b] = motion_cross(v[b], vj);
    inertia[b] = tree.body_spatial_inertia(i + 1);
    bias[b] = force_cross(v[b], inertia[b] * v[b]) - ws.f_ext[b];
  }

  for (int i = n - 1; i >= 0; --i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    const auto p = static_cast<std::size_t>(link.parent + 1);
    Vec6 pa;
    if (is_locked(inputs.locked, i)) {
      pa = bias[b] + inertia[b] * c[b];
    } else {
      const double tau = std::clamp(joint_torques[static_cast<std::size_t>(i)], -tree.limits().tau_max[i],
                                    tree.limits().tau_max[i]);
      U[b] = inertia[b].leftCols<3>() * link.axis;
      D[b] = link.axis.dot(U[b].head<3>());
      u[b] = tau - link.axis.dot(bias[b].head<3>());
      inertia[b] -= U[b] * U[b].transpose() / D[b];
      pa = bias[b] + inertia[b] * c[b] + U[b] * (u[b] / D[b]);
    }
    const PluckerTransform& x = frames.parent_to_body[static_cast<std::size_t>(i)];
    inertia[p] += congruence(x, inertia[b]);
    bias[p] += x.transpose_force(pa);
  }

  Eigen::LLT<Mat6> llt(inertia[0]);
  if (llt.info() != Eigen::Success) {
    throw InternalError("articulated base inertia is not positive definite");
  }
  a[0] = -llt.solve(bias[0]);

  Accelerations out;
  out.qddot = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    a[b] = frames.parent_to_body[static_cast<std::size_t>(i)].apply_motion(a[static_cast<std::size_t>(link.parent + 1)]) + c[b];
    if (!is_locked(inputs.locked, i)) {
      const double qdd = (u[b] - U[b].dot(a[b])) / D[b];
      out.qddot[i] = qdd;
      a[b] += motion_axis(link) * qdd;
    }
  }

  const Mat3& r0 = frames.rotation[0];
  out.base_angular = r0 * a[0].head<3>();
  out.base_linear = r0 * (a[0].tail<3>() + v[0].head<3>().cross(v[0].tail<3>()));
  if (!out.qddot.allFinite() || !out.base_linear.allFinite() || !out.base_angular.allFinite()) {
    throw InternalError("forward dynamics produced non-finite accelerations");
  }
  return out;
}

}  // namespace

Kinematics forward_kinematics(const KinematicTree& tree, const SystemState& state) {
  state.check_dimensions(tree);
  const Frames f = compute_frames(tree, state);
  Kinematics out;
  out.bodies.reserve(f.rotation.size());
  for (std::size_t b = 0; b < f.rotation.size(); ++b) {
    out.bodies.push_back({f.position[b], Quat(f.rotation[b])});
  }
  for (const EndEffector& ee : tree.end_effectors()) {
    const auto b = static_cast<std::size_t>(ee.link + 1);
    out.end_effectors.push_back({f.position[b] + f.rotation[b] * ee.offset, Quat(f.rotation[b] * ee.rotation)});
  }
  return out;
}

std::vector<BodyTwist> body_twists(const KinematicTree& tree, const SystemState& state) {
  state.check_dimensions(tree);
  const Frames f = compute_frames(tree, state);
  std::vector<BodyTwist> out(static_cast<std::size_t>(tree.num_bodies()));
  out[0] = {state.base_angular_velocity, state.base_linear_velocity};
  for (int i = 0; i < tree.num_joints(); ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    const auto p = static_cast<std::size_t>(link.parent + 1);
    out[b].linear = out[p].linear + out[p].angular.cross(f.position[b] - f.position[p]);
    out[b].angular = out[p].angular + f.rotation[b] * link.axis * state.qdot[i];
  }
  return out;
}

Accelerations forward_dynamics(const KinematicTree& tree, const SystemState& state,
                               std::span<const double> joint_torques, DynamicsInputs inputs) {
  check_inputs(tree, state, joint_torques, inputs);
  Workspace& ws = workspace(tree);
  compute_frames(tree, state, ws.frames);
  return articulated_body(tree, state, joint_torques, inputs, ws);
}

Eigen::VectorXd inverse_dynamics(const KinematicTree& tree, const SystemState& state,
                                 const Accelerations& accelerations, std::span<const ExternalWrench> wrenches) {
  state.check_dimensions(tree);
  const int n = tree.num_joints();
  if (accelerations.qddot.size() != n) {
    throw ConfigurationError("joint acceleration vector does not match the joint count");
  }
  const auto nb = static_cast<std::size_t>(n + 1);
  const Frames frames = compute_frames(tree, state);
  std::vector<Vec6> f_ext;
  external_forces(tree, frames, wrenches, f_ext);
  const Mat3& r0 = frames.rotation[0];

  std::vector<Vec6> v(nb), a(nb), f(nb);
  v[0] = base_velocity_body(state, r0);
  a[0].head<3>() = r0.transpose() * accelerations.base_angular;
  a[0].tail<3>() = r0.transpose() * accelerations.base_linear - v[0].head<3>().cross(v[0].tail<3>());
  {
    const Mat6& inertia = tree.body_spatial_inertia(0);
    f[0] = inertia * a[0] + force_cross(v[0], inertia * v[0]) - f_ext[0];
  }
  for (int i = 0; i < n; ++i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    const auto p = static_cast<std::size_t>(link.parent + 1);
    const PluckerTransform& x = frames.parent_to_body[static_cast<std::size_t>(i)];
    const Vec6 s = motion_axis(link);
    const Vec6 vj = s * state.qdot[i];
    v[b] = x.apply_motion(v[p]) + vj;
    a[b] = x.apply_motion(a[p]) + s * accelerations.qddot[i] + motion_cross(v[b], vj);
    const Mat6& inertia = tree.body_spatial_inertia(i + 1);
    f[b] = inertia * a[b] + force_cross(v[b], inertia * v[b]) - f_ext[b];
  }

  Eigen::VectorXd out(6 + n);
  for (int i = n - 1; i >= 0; --i) {
    const Link& link = tree.link(i);
    const auto b = static_cast<std::size_t>(i + 1);
    out[6 + i] = link.axis.dot(f[b].head<3>());
    f[static_cast<std::size_t>(link.parent + 1)] += frames.parent_to_body[static_cast<std::size_t>(i)].transpose_force(f[b]);
  }
  out.head<3>() = r0 * f[0].head<3>();
  out.segment<3>(3) = r0 * f[0].tail<3>();
  return out;
}

SystemState step(const KinematicTree& tree, const SystemState& state, std::span<const double> joint_torques,
                 double dt, DynamicsInputs inputs) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
  check_inputs(tree, state, joint_torques, inputs);
  Workspace& ws = workspace(tree);
  compute_frames(tree, state, ws.frames);

  // Target momentum about the centre of mass: current value plus the
  // external impulse over dt.
  const Vec3 com = frames_com(tree, ws.frames);
  Vec6 target = world_to_base(ws.frames).transpose_force(momentum_in_base(tree, state, ws, true));
  target.head<3>() -= com.cross(target.tail<3>());
  for (const ExternalWrench& w : inputs.wrenches) {
    if (w.body < 0 || w.body >= tree.num_bodies()) continue;  // rejected below
    const auto b = static_cast<std::size_t>(w.body);
    const Vec3 at = ws.frames.position[b] + ws.frames.rotation[b] * body_inertia(tree, w.body).com_offset;
    target.head<3>() += dt * (w.torque + (at - com).cross(w.force));
    target.tail<3>() += dt * w.force;
  }

  const Accelerations acc = articulated_body(tree, state, joint_torques, inputs, ws);

  SystemState next = state;
  const JointLimits& lim = tree.limits();
  next.base_linear_velocity += dt * acc.base_linear;
  next.base_angular_velocity += dt * acc.base_angular;
  for (int i = 0; i < tree.num_joints(); ++i) {
    double qd = is_locked(inputs.locked, i) ? 0.0 : state.qdot[i] + dt * acc.qddot[i];
    qd = std::clamp(qd, -lim.qdot_max[i], lim.qdot_max[i]);
    double q = state.q[i] + dt * qd;
    if (q > lim.q_max[i] || q < -lim.q_max[i]) {
      q = std::clamp(q, -lim.q_max[i], lim.q_max[i]);
      qd = 0.0;
    }
    next.q[i] = q;
    next.qdot[i] = qd;
  }
  next.base_position += dt * next.base_linear_velocity;
  next.base_orientation = integrate_orientation(state.base_orientation, next.base_angular_velocity, dt);
  next.time = state.time + dt;

  // The centre of mass moves exactly with the new linear momentum; the base is
  // translated to put it there, so the angular momentum about it stays exact.
  compute_frames(tree, next, ws.frames);
  const Vec3 com_next = com + dt * target.tail<3>() / tree.total_mass();
  const Vec3 shift = com_next - frames_com(tree, ws.frames);
  next.base_position += shift;
  for (Vec3& p : ws.frames.position) p += shift;
  target.head<3>() += com_next.cross(target.tail<3>());

  // Re-solve the base twist at the new configuration for the target momentum.
  const Vec6 joint_part = momentum_in_base(tree, next, ws, false);
  const Mat6 composite = composite_inertia(tree, ws);
  const Vec6 target_base = world_to_base(ws.frames).apply_force(target);
  Eigen::LLT<Mat6> llt(composite);
  if (llt.info() != Eigen::Success) {
    throw InternalError("composite inertia is not positive definite");
  }
  const Vec6 v0 = llt.solve(target_base - joint_part);
  const Mat3& r0 = ws.frames.rotation[0];
  next.base_angular_velocity = r0 * v0.head<3>();
  next.base_linear_velocity = r0 * v0.tail<3>();
  return next;
}

Vec3 center_of_mass(const KinematicTree& tree, const SystemState& state) {
  const Kinematics k = forward_kinematics(tree, state);
  Vec3 sum = Vec3::Zero();
  for (int b = 0; b < tree.num_bodies(); ++b) {
    const SpatialInertia& in = body_inertia(tree, b);
    const BodyPose& pose = k.bodies[static_cast<std::size_t>(b)];
    sum += in.mass * (pose.position + pose.orientation * in.com_offset);
  }
  return sum / tree.total_mass();
}

Momentum total_momentum(const KinematicTree& tree, const SystemState& state) {
  const Kinematics k = forward_kinematics(tree, state);
  const std::vector<BodyTwist> twists = body_twists(tree, state);
  const Vec3 com = center_of_mass(tree, state);
  Momentum m;
  for (int b = 0; b < tree.num_bodies(); ++b) {
    const auto i = static_cast<std::size_t>(b);
    const SpatialInertia& in = body_inertia(tree, b);
    const Mat3 r = k.bodies[i].orientation.toRotationMatrix();
    const Vec3 c = k.bodies[i].position + r * in.com_offset;
    const Vec3 vc = twists[i].linear + twists[i].angular.cross(c - k.bodies[i].position);
    m.linear += in.mass * vc;
    m.angular += r * in.rotational_inertia * r.transpose() * twists[i].angular + in.mass * (c - com).cross(vc);
  }
  return m;
}

}  // namespace octo::dynamics
