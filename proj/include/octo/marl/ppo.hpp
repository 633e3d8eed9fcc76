#pragma once

#include <span>
#include <vector>

#include "octo/nn/adam.hpp"
#include "octo/nn/gaussian_policy.hpp"
#include "octo/nn/mlp.hpp"

namespace octo::marl {

/// clamp(r, 1 - eps, 1 + eps)
double clip_ratio(double ratio, double eps);

/// One column per sample.
struct ActorBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd pre_squash;
  Eigen::MatrixXd noise;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;
};

struct ActorGradients {
  std::vector<double> mlp;  // d(loss)/d(mean-net params)
  Eigen::VectorXd log_std;  // d(loss)/d(log_std)
  double surrogate = 0.0;   // mean of min(r A, clip(r) A)
  double entropy = 0.0;     // mean squash-corrected entropy estimate
  double clip_fraction = 0.0;
  double approx_kl = 0.0;   // mean of (old - new) log-prob
  /// Per-sample min(r A, clip(r) A), for checking the clipping bound.
  Eigen::VectorXd per_sample;
  Eigen::VectorXd ratios;
};

/// Gradient of loss = -(surrogate + entropy_coef * entropy). The entropy
/// estimate re-evaluates each sample's tanh correction at mean + std * noise
/// so it carries gradient to both the mean and the log-std. Throws
/// TrainingError if a ratio is non-finite.
ActorGradients ppo_actor_gradients(const nn::GaussianPolicy& policy, const ActorBatch& batch, double clip,
                                   double entropy_coef);

struct ActorOptimizer {
  nn::AdamState mean;
  nn::AdamState log_std;

  ActorOptimizer() = default;
  ActorOptimizer(const nn::GaussianPolicy& policy, double lr);
};

/// One Adam step on the clipped objective. Returns the gradients used.
ActorGradients ppo_actor_update(nn::GaussianPolicy& policy, const ActorBatch& batch, double clip,
                                double entropy_coef, ActorOptimizer& opt, double max_grad_norm);

struct CriticBatch {
  Eigen::MatrixXd states;   // one column per sample
  Eigen::VectorXd targets;  // y_t in reward units
};

/// The network predicts V / value_scale.
Eigen::VectorXd predict_values(const nn::Mlp& critic, const Eigen::MatrixXd& states, double value_scale);
/// y_t = r_t + gamma V_target(s_{t+1}), with the bootstrap dropped where done.
Eigen::VectorXd td_targets(const nn::Mlp& target_critic, std::span<const double> rewards,
                           const Eigen::MatrixXd& next_states, std::span<const std::uint8_t> dones, double gamma,
                           double value_scale);
/// Mean squared error in scaled units.
double critic_loss(const nn::Mlp& critic, const CriticBatch& batch, double value_scale);
/// One Adam step on critic_loss; returns the loss before the step. Throws
/// TrainingError on a non-finite loss.
double critic_update(nn::Mlp& critic, const CriticBatch& batch, nn::AdamState& opt, double value_scale,
                     double max_grad_norm);
/// Hard copy of the live parameters into the target.
void sync_target(const nn::Mlp& live, nn::Mlp& target);

}  // namespace octo::marl
