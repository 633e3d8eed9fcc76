#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace octo::nn {

struct AdamState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t size, double learning_rate);
};

/// Bias-corrected Adam update in place. Throws TrainingError, leaving params
/// and state untouched, if any gradient is non-finite; ConfigurationError on
/// a size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Scales grads so their joint L2 norm is at most max_norm; returns the norm
/// before scaling.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace octo::nn
