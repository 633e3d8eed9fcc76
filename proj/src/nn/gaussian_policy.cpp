#include "octo/nn/gaussian_policy.hpp"

#include <cmath>
#include <numbers>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"

namespace octo::nn {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double tanh_log_det(const Eigen::VectorXd& x) {
  // log(1 - tanh(x)^2) = 2 (log 2 - x - softplus(-2x))
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double y = -2.0 * x[i];
    const double softplus = y > 0.0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y));
    s += 2.0 * (std::numbers::ln2 - x[i] - softplus);
  }
  return s;
}

GaussianPolicy::GaussianPolicy(Mlp mean, Eigen::VectorXd log_std) : mean_(std::move(mean)) {
  if (log_std.size() != mean_.output_size()) {
    throw ConfigurationError("log_std length must equal the action size");
  }
  set_log_std(log_std);
}

GaussianPolicy::GaussianPolicy(int obs_size, std::vector<int> hidden, int action_size, double initial_log_std) {
  std::vector<int> sizes{obs_size};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_size);
  mean_ = Mlp(sizes);
  set_log_std(Eigen::VectorXd::Constant(action_size, initial_log_std));
}

void GaussianPolicy::set_log_std(const Eigen::VectorXd& log_std) {
  if (!log_std.allFinite()) throw TrainingError("non-finite log_std");
  log_std_ = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

void GaussianPolicy::initialize(Rng& rng) { mean_.initialize(rng, 0.01); }

Eigen::VectorXd GaussianPolicy::deterministic_action(const Eigen::VectorXd& obs) const {
  return mean_.forward(obs).array().tanh();
}

PolicySample GaussianPolicy::sample(const Eigen::VectorXd& obs, Rng& rng) const {
  Eigen::VectorXd noise(action_size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  return sample_with_noise(obs, noise);
}

PolicySample GaussianPolicy::sample(const Eigen::VectorXd& obs, std::uint64_t noise_seed) const {
  Rng rng(noise_seed);
  return sample(obs, rng);
}

PolicySample GaussianPolicy::sample_with_noise(const Eigen::VectorXd& obs, const Eigen::VectorXd& noise) const {
  if (noise.size() != action_size()) throw ConfigurationError("noise length must equal the action size");
  PolicySample s;
  const Eigen::VectorXd mu = mean_.forward(obs);
  s.noise = noise;
  s.pre_squash = mu.array() + log_std_.array().exp() * noise.array();
  s.action = s.pre_squash.array().tanh();
  const double log_det = tanh_log_det(s.pre_squash);
  s.log_prob = gaussian_log_density(s.pre_squash, mu, log_std_) - log_det;
  s.entropy = gaussian_entropy() + log_det;
  return s;
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const {
  return gaussian_log_density(pre_squash, mean_.forward(obs), log_std_) - tanh_log_det(pre_squash);
}

double GaussianPolicy::gaussian_entropy() const {
  return log_std_.sum() + static_cast<double>(log_std_.size()) * (0.5 + kHalfLog2Pi);
}

}  // namespace octo::nn
