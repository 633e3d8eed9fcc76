#include "octo/marl/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "octo/common/errors.hpp"

namespace octo::marl {

double clip_ratio(double ratio, double eps) { return std::clamp(ratio, 1.0 - eps, 1.0 + eps); }

ActorGradients ppo_actor_gradients(const nn::GaussianPolicy& policy, const ActorBatch& batch, double clip,
                                   double entropy_coef) {
  const Eigen::Index b = batch.obs.cols();
  const Eigen::Index k = policy.action_size();
  if (b == 0) throw InputError("empty actor batch");
  if (batch.pre_squash.rows() != k || batch.pre_squash.cols() != b || batch.noise.rows() != k ||
      batch.noise.cols() != b || batch.old_log_prob.size() != b || batch.advantages.size() != b) {
    throw ConfigurationError("actor batch shapes are inconsistent");
  }
  nn::MlpCache cache;
  const Eigen::MatrixXd mu = policy.mean_net().forward(batch.obs, cache);
  const Eigen::VectorXd log_std = policy.log_std();
  const Eigen::VectorXd std = log_std.array().exp();

  ActorGradients g;
  g.per_sample.resize(b);
  g.ratios.resize(b);
  g.log_std = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd dmu(k, b);
  const double inv_b = 1.0 / static_cast<double>(b);
  const double gaussian_entropy = policy.gaussian_entropy();
  int clipped = 0;
  for (Eigen::Index s = 0; s < b; ++s) {
    const Eigen::VectorXd x = batch.pre_squash.col(s);
    const double logp = nn::gaussian_log_density(x, mu.col(s), log_std) - nn::tanh_log_det(x);
    const double ratio = std::exp(logp - batch.old_log_prob[s]);
    if (!std::isfinite(ratio)) throw TrainingError("PPO probability ratio is not finite");
    const double adv = batch.advantages[s];
    const double unclipped = ratio * adv;
    const double clipped_term = clip_ratio(ratio, clip) * adv;
    g.per_sample[s] = std::min(unclipped, clipped_term);
    g.ratios[s] = ratio;
    g.surrogate += g.per_sample[s] * inv_b;
    g.approx_kl += (batch.old_log_prob[s] - logp) * inv_b;
    // The clipped branch is constant in theta; it is active exactly when it
    // is the strict minimum.
    const bool flat = (adv >= 0.0 && ratio > 1.0 + clip) || (adv < 0.0 && ratio < 1.0 - clip);
    if (flat) ++clipped;
    const double coeff = flat ? 0.0 : unclipped;  // d(r A)/d(log p) = r A

    for (Eigen::Index i = 0; i < k; ++i) {
      const double z = (x[i] - mu(i, s)) / std[i];
      const double y = mu(i, s) + std[i] * batch.noise(i, s);
      const double t = std::tanh(y);
      // loss = -(coeff * logp + c * entropy); entropy term d/dy = -2 tanh(y)
      dmu(i, s) = -inv_b * (coeff * z / std[i] + entropy_coef * (-2.0 * t));
      g.log_std[i] += -inv_b * (coeff * (z * z - 1.0) + entropy_coef * (-2.0 * t) * std[i] * batch.noise(i, s));
    }
    const Eigen::VectorXd y = mu.col(s).array() + std.array() * batch.noise.col(s).array();
    g.entropy += (gaussian_entropy + nn::tanh_log_det(y)) * inv_b;
  }
  g.log_std.array() -= entropy_coef;  // d(-c * sum log_std)/d log_std
  g.clip_fraction = static_cast<double>(clipped) * inv_b;
  g.mlp.assign(policy.mean_net().num_params(), 0.0);
  policy.mean_net().backward(cache, dmu, g.mlp);
  return g;
}

ActorOptimizer::ActorOptimizer(const nn::GaussianPolicy& policy, double lr)
    : mean(policy.mean_net().num_params(), lr), log_std(static_cast<std::size_t>(policy.action_size()), lr) {}

ActorGradients ppo_actor_update(nn::GaussianPolicy& policy, const ActorBatch& batch, double clip,
                                double entropy_coef, ActorOptimizer& opt, double max_grad_norm) {
  ActorGradients g = ppo_actor_gradients(policy, batch, clip, entropy_coef);
  nn::clip_grad_norm(g.mlp, max_grad_norm);
  Eigen::VectorXd log_std_grad = g.log_std;
  nn::clip_grad_norm(std::span<double>(log_std_grad.data(), static_cast<std::size_t>(log_std_grad.size())),
                     max_grad_norm);
  nn::adam_step(policy.mean_net().mutable_params(), g.mlp, opt.mean);
  Eigen::VectorXd log_std = policy.log_std();
  nn::adam_step(std::span<double>(log_std.data(), static_cast<std::size_t>(log_std.size())),
                std::span<const double>(log_std_grad.data(), static_cast<std::size_t>(log_std_grad.size())),
                opt.log_std);
  policy.set_log_std(log_std);
  return g;
}

Eigen::VectorXd predict_values(const nn::Mlp& critic, const Eigen::MatrixXd& states, double value_scale) {
  nn::MlpCache cache;
  return critic.forward(states, cache).row(0).transpose() * value_scale;
}

Eigen::VectorXd td_targets(const nn::Mlp& target_critic, std::span<const double> rewards,
                           const Eigen::MatrixXd& next_states, std::span<const std::uint8_t> dones, double gamma,
                           double value_scale) {
  const auto n = static_cast<Eigen::Index>(rewards.size());
  if (next_states.cols() != n || dones.size() != rewards.size()) {
    throw ConfigurationError("td_targets: rewards, next states and dones must be aligned");
  }
  const Eigen::VectorXd next = predict_values(target_critic, next_states, value_scale);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = rewards[static_cast<std::size_t>(i)] + (dones[static_cast<std::size_t>(i)] ? 0.0 : gamma * next[i]);
  }
  return y;
}

double critic_loss(const nn::Mlp& critic, const CriticBatch& batch, double value_scale) {
  const Eigen::VectorXd v = predict_values(critic, batch.states, value_scale);
  return ((v - batch.targets) / value_scale).squaredNorm() / static_cast<double>(batch.targets.size());
}

double critic_update(nn::Mlp& critic, const CriticBatch& batch, nn::AdamState& opt, double value_scale,
                     double max_grad_norm) {
  const Eigen::Index b = batch.states.cols();
  if (b == 0 || batch.targets.size() != b) throw ConfigurationError("critic batch shapes are inconsistent");
  nn::MlpCache cache;
  const Eigen::MatrixXd out = critic.forward(batch.states, cache);
  const Eigen::RowVectorXd err = out.row(0) - (batch.targets / value_scale).transpose();
  const double loss = err.squaredNorm() / static_cast<double>(b);
  if (!std::isfinite(loss)) throw TrainingError("critic loss is not finite");
  Eigen::MatrixXd grad = (2.0 / static_cast<double>(b)) * err;
  std::vector<double> g(critic.num_params(), 0.0);
  critic.backward(cache, grad, g);
  nn::clip_grad_norm(g, max_grad_norm);
  nn::adam_step(critic.mutable_params(), g, opt);
  return loss;
}

void sync_target(const nn::Mlp& live, nn::Mlp& target) { target = live; }

}  // namespace octo::marl
