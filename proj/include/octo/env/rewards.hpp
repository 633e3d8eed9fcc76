#pragma once

#include <span>

#include "octo/dynamics/spatial.hpp"

namespace octo::env {

struct RewardConfig {
  double w1 = 0.001;  // squared error
  double w2 = 1.0;    // error inside the log
  double w3 = 0.01;   // action change
  double w4 = 0.05;   // action magnitude
  double w5 = 0.50;   // collision
  double epsilon_log = 1e-3;

  /// Throws ConfigurationError on negative weights or epsilon_log <= 0.
  void validate() const;
};

/// -[w1 |e|^2 + log(w2 |e|^2 + eps) + w3 |u_t - u_prev|^2 + w4 |u_t|^2].
/// `e` is a position error (m) or an orientation error (rad). Actions are the
/// normalized policy outputs. The torques are accepted for interface
/// completeness and do not enter the value.
double reward_trajectory(const dynamics::Vec3& e, std::span<const double> u_t, std::span<const double> u_prev,
                         std::span<const double> torques, const RewardConfig& cfg);

/// Shared base-attitude reward: the trajectory form on the attitude error
/// plus w5 when the robot is in collision.
double reward_base(const dynamics::Vec3& e_b, std::span<const double> u_t, std::span<const double> u_prev,
                   std::span<const double> torques, bool collided, const RewardConfig& cfg);

}  // namespace octo::env
