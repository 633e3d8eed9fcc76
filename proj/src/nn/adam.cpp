#include "octo/nn/adam.hpp"

#include <cmath>

#include "octo/common/errors.hpp"

namespace octo::nn {

AdamState::AdamState(std::size_t size, double learning_rate)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))),
      lr(learning_rate) {}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (grads.size() != params.size() || s.m.size() != n || s.v.size() != n) {
    throw ConfigurationError("adam: parameter, gradient and moment sizes differ");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw TrainingError("adam: non-finite gradient, step rejected");
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = grads[static_cast<std::size_t>(i)];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    params[static_cast<std::size_t>(i)] -= s.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace octo::nn
