#pragma once

#include <cstdint>

#include "octo/nn/mlp.hpp"

namespace octo::nn {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicySample {
  Eigen::VectorXd action;      // tanh(pre_squash), in (-1, 1)
  Eigen::VectorXd pre_squash;  // mean + std * noise
  Eigen::VectorXd noise;
  double log_prob = 0.0;       // of `action`, with the tanh correction
  double entropy = 0.0;        // squash-corrected single-sample estimate
};

/// Diagonal Gaussian over pre-squash actions with a state-independent
/// log-std, followed by tanh.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(Mlp mean, Eigen::VectorXd log_std);
  /// Mean network {obs, hidden..., act} with tanh hidden layers.
  GaussianPolicy(int obs_size, std::vector<int> hidden, int action_size, double initial_log_std = -0.5);

  const Mlp& mean_net() const { return mean_; }
  Mlp& mean_net() { return mean_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  /// Sets the log-std clamped into [kLogStdMin, kLogStdMax].
  void set_log_std(const Eigen::VectorXd& log_std);
  int obs_size() const { return mean_.input_size(); }
  int action_size() const { return mean_.output_size(); }

  void initialize(Rng& rng);

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const { return mean_.forward(obs); }
  /// tanh(mean): the action used for evaluation.
  Eigen::VectorXd deterministic_action(const Eigen::VectorXd& obs) const;

  PolicySample sample(const Eigen::VectorXd& obs, Rng& rng) const;
  PolicySample sample_with_noise(const Eigen::VectorXd& obs, const Eigen::VectorXd& noise) const;
  /// Draws the noise from a fresh stream seeded with `noise_seed`.
  PolicySample sample(const Eigen::VectorXd& obs, std::uint64_t noise_seed) const;

  /// Log-density of the squashed action whose pre-image is `pre_squash`.
  double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const;
  /// Closed-form entropy of the pre-squash Gaussian.
  double gaussian_entropy() const;

 private:
  Mlp mean_;
  Eigen::VectorXd log_std_;
};

/// log N(x; mean, exp(log_std)) summed over dimensions.
double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);
/// sum_i log(1 - tanh(x_i)^2), evaluated without cancellation.
double tanh_log_det(const Eigen::VectorXd& x);

}  // namespace octo::nn
