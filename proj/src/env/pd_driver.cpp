#include "octo/env/pd_driver.hpp"

#include <algorithm>
#include <cmath>

#include "octo/common/errors.hpp"

namespace octo::env {

void pd_driver(std::span<const double> desired_qdot, std::span<const double> current_qdot,
               std::span<const double> qddot_estimate, const PdGains& gains, std::span<const double> tau_max,
               std::span<double> torques) {
  const std::size_t n = desired_qdot.size();
  if (current_qdot.size() != n || qddot_estimate.size() != n || tau_max.size() != n || torques.size() != n ||
      static_cast<std::size_t>(gains.kp.size()) != n || static_cast<std::size_t>(gains.kd.size()) != n) {
    throw ConfigurationError("pd_driver: vector lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(desired_qdot[i]) || !std::isfinite(current_qdot[i]) || !std::isfinite(qddot_estimate[i])) {
      throw InputError("pd_driver: non-finite input");
    }
    const auto k = static_cast<Eigen::Index>(i);
    const double tau = gains.kp[k] * (desired_qdot[i] - current_qdot[i]) - gains.kd[k] * qddot_estimate[i];
    torques[i] = std::clamp(tau, -tau_max[i], tau_max[i]);
  }
}

Eigen::VectorXd pd_driver(std::span<const double> desired_qdot, std::span<const double> current_qdot,
                          std::span<const double> qddot_estimate, const PdGains& gains,
                          std::span<const double> tau_max) {
  Eigen::VectorXd tau(static_cast<Eigen::Index>(desired_qdot.size()));
  pd_driver(desired_qdot, current_qdot, qddot_estimate, gains, tau_max, std::span<double>(tau.data(), tau.size()));
  return tau;
}

PdGains default_arm_gains(int joints_per_arm) {
  PdGains g;
  if (joints_per_arm == 3) {
    g.kp = Eigen::Vector3d(40.0, 40.0, 20.0);
  } else if (joints_per_arm == 6) {
    g.kp.resize(6);
    g.kp << 40.0, 40.0, 20.0, 5.0, 1.0, 0.05;
  } else {
    throw ConfigurationError("default gains exist only for 3- and 6-joint arms");
  }
  g.kd = Eigen::VectorXd::Zero(joints_per_arm);
  return g;
}

}  // namespace octo::env
