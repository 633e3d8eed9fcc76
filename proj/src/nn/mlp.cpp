#include "octo/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"

namespace octo::nn {

Mlp::Mlp(std::vector<int> sizes, Activation hidden) : sizes_(std::move(sizes)), activation_(hidden) {
  if (sizes_.size() < 2) throw ConfigurationError("an MLP needs input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw ConfigurationError("MLP layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]) * static_cast<std::size_t>(sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const RowMatrix> Mlp::weights(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]};
}

void Mlp::initialize(Rng& rng, double output_gain) {
  std::span<double> p = mutable_params();
  for (int l = 0; l < num_layers(); ++l) {
    const auto fan_in = sizes_[static_cast<std::size_t>(l)];
    const auto fan_out = sizes_[static_cast<std::size_t>(l) + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out)) * (l + 1 == num_layers() ? output_gain : 1.0);
    double* w = p.data() + weight_offset(l);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-limit, limit);
    for (int i = 0; i < fan_out; ++i) w[fan_in * fan_out + i] = 0.0;
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  if (input.size() != input_size()) {
    throw ConfigurationError("MLP input has " + std::to_string(input.size()) + " entries, expected " +
                             std::to_string(input_size()));
  }
  Eigen::VectorXd a = input;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::VectorXd z = weights(l) * a + bias(l);
    if (l + 1 < num_layers() && activation_ == Activation::Tanh) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, MlpCache& cache) const {
  if (inputs.rows() != input_size()) {
    throw ConfigurationError("MLP batch has " + std::to_string(inputs.rows()) + " input rows, expected " +
                             std::to_string(input_size()));
  }
  cache.activations.resize(static_cast<std::size_t>(num_layers()) + 1);
  cache.activations[0] = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    auto& out = cache.activations[static_cast<std::size_t>(l) + 1];
    out.noalias() = weights(l) * cache.activations[static_cast<std::size_t>(l)];
    out.colwise() += bias(l);
    if (l + 1 < num_layers() && activation_ == Activation::Tanh) out = out.array().tanh();
  }
  cache.version = version_;
  cache.owner = this;
  return cache.activations.back();
}

void Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& output_grad, std::span<double> param_grad,
                   Eigen::MatrixXd* input_grad) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.activations.size() != static_cast<std::size_t>(num_layers()) + 1) {
    throw InternalError("MLP backward called with a stale or foreign cache");
  }
  if (param_grad.size() != num_params()) throw ConfigurationError("MLP gradient buffer has the wrong size");
  const Eigen::Index batch = cache.activations[0].cols();
  if (output_grad.rows() != output_size() || output_grad.cols() != batch) {
    throw ConfigurationError("MLP output gradient shape does not match the forward batch");
  }
  Eigen::MatrixXd delta = output_grad;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    if (l + 1 < num_layers() && activation_ == Activation::Tanh) {
      delta.array() *= 1.0 - cache.activations[lu + 1].array().square();
    }
    Eigen::Map<RowMatrix> gw(param_grad.data() + weight_offset(l), sizes_[lu + 1], sizes_[lu]);
    Eigen::Map<Eigen::VectorXd> gb(param_grad.data() + weight_offset(l) + static_cast<std::size_t>(sizes_[lu + 1] * sizes_[lu]),
                                   sizes_[lu + 1]);
    gw.noalias() += delta * cache.activations[lu].transpose();
    gb += delta.rowwise().sum();
    if (l > 0 || input_grad != nullptr) {
      Eigen::MatrixXd next = weights(l).transpose() * delta;
      delta = std::move(next);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
}

}  // namespace octo::nn
