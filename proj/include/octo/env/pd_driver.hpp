#pragma once

#include <span>

#include <Eigen/Dense>

namespace octo::env {

/// Fixed velocity-tracking gains, one entry per controlled joint.
struct PdGains {
  Eigen::VectorXd kp;  // N m s / rad
  Eigen::VectorXd kd;  // N m s^2 / rad
};

/// tau = kp (qdot_des - qdot) - kd qddot_est, clamped to +-tau_max.
/// Throws InputError on non-finite input and ConfigurationError on length
/// mismatch.
void pd_driver(std::span<const double> desired_qdot, std::span<const double> current_qdot,
               std::span<const double> qddot_estimate, const PdGains& gains, std::span<const double> tau_max,
               std::span<double> torques);

Eigen::VectorXd pd_driver(std::span<const double> desired_qdot, std::span<const double> current_qdot,
                          std::span<const double> qddot_estimate, const PdGains& gains,
                          std::span<const double> tau_max);

/// Default per-arm gains for 3- and 6-joint UR5-like arms. Each kp keeps
/// kp * dt well below twice the smallest effective joint inertia at dt = 1e-3.
PdGains default_arm_gains(int joints_per_arm);

}  // namespace octo::env
