#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace octo {
class Rng;
}

namespace octo::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Activation of the hidden layers. The output layer is always linear.
enum class Activation : std::uint32_t { Tanh = 0, Identity = 1 };

/// Activations kept by a batched forward pass for the matching backward.
struct MlpCache {
  std::vector<Eigen::MatrixXd> activations;  // layer inputs/outputs, one column per sample
  std::uint64_t version = 0;
  const void* owner = nullptr;
};

/// Fully connected network with all parameters in one flat vector. Layer l
/// stores its weights row-major (out x in) followed by its bias (out).
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {input, hidden..., output}; needs at least two entries.
  explicit Mlp(std::vector<int> sizes, Activation hidden = Activation::Tanh);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  std::span<const double> params() const { return {params_.data(), num_params()}; }
  /// Mutable access invalidates every cache taken before it.
  std::span<double> mutable_params() {
    ++version_;
    return {params_.data(), num_params()};
  }
  std::uint64_t version() const { return version_; }

  Eigen::Map<const RowMatrix> weights(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  /// Xavier-uniform weights, zero biases; the last layer is scaled by
  /// `output_gain`.
  void initialize(Rng& rng, double output_gain = 1.0);

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  /// Batched forward, one sample per column. Fills `cache` for backward.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, MlpCache& cache) const;
  /// Accumulates parameter gradients of sum(output_grad . output) into
  /// `param_grad` and optionally returns the input gradient. Throws
  /// InternalError if the cache is stale or from another network.
  void backward(const MlpCache& cache, const Eigen::MatrixXd& output_grad, std::span<double> param_grad,
                Eigen::MatrixXd* input_grad = nullptr) const;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  std::vector<int> sizes_;
  Activation activation_ = Activation::Tanh;
  Eigen::VectorXd params_;
  std::vector<std::size_t> offsets_;
  std::uint64_t version_ = 1;
};

}  // namespace octo::nn
