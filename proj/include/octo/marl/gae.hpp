#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace octo::marl {

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  // advantages + values
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t
/// A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
/// V_{T} is `bootstrap`; done_t = 1 ends an episode after step t. `dones`
/// may be empty (no terminations). Throws InputError on empty or misaligned
/// series.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

/// In place: subtract the mean and divide by the standard deviation (left
/// centred only when the spread is below 1e-12).
void normalize_advantages(std::span<double> advantages);

}  // namespace octo::marl
