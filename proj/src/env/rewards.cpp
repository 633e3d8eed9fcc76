#include "octo/env/rewards.hpp"

#include <cmath>

#include "octo/common/errors.hpp"

namespace octo::env {

void RewardConfig::validate() const {
  for (double w : {w1, w2, w3, w4, w5}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigurationError("reward weights must be finite and >= 0");
  }
  if (!(epsilon_log > 0.0) || !std::isfinite(epsilon_log)) {
    throw ConfigurationError("reward epsilon_log must be positive");
  }
}

namespace {

double action_cost(std::span<const double> u_t, std::span<const double> u_prev, const RewardConfig& cfg) {
  if (u_t.size() != u_prev.size()) throw ConfigurationError("reward: action lengths differ");
  double change = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i < u_t.size(); ++i) {
    const double d = u_t[i] - u_prev[i];
    change += d * d;
    magnitude += u_t[i] * u_t[i];
  }
  return cfg.w3 * change + cfg.w4 * magnitude;
}

}  // namespace

double reward_trajectory(const dynamics::Vec3& e, std::span<const double> u_t, std::span<const double> u_prev,
                         std::span<const double> /*torques*/, const RewardConfig& cfg) {
  const double e2 = e.squaredNorm();
  return -(cfg.w1 * e2 + std::log(cfg.w2 * e2 + cfg.epsilon_log) + action_cost(u_t, u_prev, cfg));
}

double reward_base(const dynamics::Vec3& e_b, std::span<const double> u_t, std::span<const double> u_prev,
                   std::span<const double> torques, bool collided, const RewardConfig& cfg) {
  return reward_trajectory(e_b, u_t, u_prev, torques, cfg) - (collided ? cfg.w5 : 0.0);
}

}  // namespace octo::env
