#include "octo/marl/gae.hpp"

#include <cmath>

#include "octo/common/errors.hpp"

namespace octo::marl {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw InputError("compute_gae: empty series");
  if (values.size() != n || (!dones.empty() && dones.size() != n)) {
    throw InputError("compute_gae: rewards, values and dones must be aligned");
  }
  GaeResult out{Eigen::VectorXd(static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
  double next_value = bootstrap;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = (!dones.empty() && dones[k]) ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    const auto i = static_cast<Eigen::Index>(k);
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / static_cast<double>(adv.size()));
  for (double& a : adv) a = std > 1e-12 ? (a - mean) / std : a - mean;
}

}  // namespace octo::marl
