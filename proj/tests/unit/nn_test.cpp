#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/nn/adam.hpp"
#include "octo/nn/gaussian_policy.hpp"
#include "octo/nn/mlp.hpp"
#include "octo/nn/serialize.hpp"

namespace octo::nn {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Plain re-implementation of the forward pass from the documented layout.
VectorXd reference_forward(const Mlp& net, const VectorXd& x) {
  std::span<const double> p = net.params();
  std::size_t at = 0;
  VectorXd h = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.sizes()[static_cast<std::size_t>(l)], out = net.sizes()[static_cast<std::size_t>(l + 1)];
    VectorXd y(out);
    for (int o = 0; o < out; ++o) {
      double s = 0.0;
      for (int i = 0; i < in; ++i) s += p[at + static_cast<std::size_t>(o * in + i)] * h[i];
      y[o] = s;
    }
    at += static_cast<std::size_t>(out * in);
    for (int o = 0; o < out; ++o) y[o] += p[at + static_cast<std::size_t>(o)];
    at += static_cast<std::size_t>(out);
    if (l + 1 < net.num_layers() && net.activation() == Activation::Tanh) y = y.array().tanh();
    h = y;
  }
  return h;
}

TEST(Mlp, ZeroWeightsOutputBias) {
  Mlp net({4, 8, 3});
  auto p = net.mutable_params();
  std::fill(p.begin(), p.end(), 0.0);
  const std::size_t last_bias = net.num_params() - 3;
  p[last_bias] = 1.0;
  p[last_bias + 1] = -2.0;
  p[last_bias + 2] = 0.5;
  Rng rng(1);
  EXPECT_EQ(net.forward(random_matrix(4, 1, rng).col(0)), Eigen::Vector3d(1.0, -2.0, 0.5));
}

TEST(Mlp, IdentityActivationIsLinear) {
  Mlp net({5, 7, 2}, Activation::Identity);
  Rng rng(2);
  net.initialize(rng);
  // Zero the biases so the map is homogeneous.
  auto p = net.mutable_params();
  const std::size_t b0 = 5 * 7, b1 = b0 + 7 + 7 * 2;
  for (int i = 0; i < 7; ++i) p[b0 + static_cast<std::size_t>(i)] = 0.0;
  for (int i = 0; i < 2; ++i) p[b1 + static_cast<std::size_t>(i)] = 0.0;
  const VectorXd x = random_matrix(5, 1, rng).col(0);
  EXPECT_LT((net.forward(3.0 * x) - 3.0 * net.forward(x)).norm(), 1e-12);
}

TEST(Mlp, MatchesReferenceImplementation) {
  Rng rng(3);
  for (const std::vector<int>& sizes : std::vector<std::vector<int>>{{24, 64, 64, 3}, {55, 64, 64, 1}, {3, 5, 2}}) {
    Mlp net(sizes);
    net.initialize(rng);
    const MatrixXd x = random_matrix(sizes.front(), 7, rng);
    MlpCache cache;
    const MatrixXd batched = net.forward(x, cache);
    for (int c = 0; c < 7; ++c) {
      const VectorXd ref = reference_forward(net, x.col(c));
      EXPECT_LT((net.forward(VectorXd(x.col(c))) - ref).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((batched.col(c) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

// Relative error with an absolute floor for near-zero gradients.
double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-5}); }

// Finite-difference check of every (or a sampled subset of) parameter and
// input gradient of a random scalar projection of the output.
void check_gradients(const std::vector<int>& sizes, std::size_t max_checked, std::uint64_t seed) {
  Rng rng(seed);
  Mlp net(sizes);
  net.initialize(rng);
  // Spread the parameters so the tanh units are not all linear.
  for (double& p : net.mutable_params()) p += 0.1 * rng.normal();
  const int batch = 3;
  const MatrixXd x = random_matrix(sizes.front(), batch, rng);
  const MatrixXd w = random_matrix(sizes.back(), batch, rng);
  auto loss = [&](const Mlp& m, const MatrixXd& in) {
    MlpCache c;
    return (m.forward(in, c).cwiseProduct(w)).sum();
  };
  MlpCache cache;
  net.forward(x, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  MatrixXd dx;
  net.backward(cache, w, grad, &dx);

  std::vector<std::size_t> idx;
  if (net.num_params() <= max_checked) {
    for (std::size_t i = 0; i < net.num_params(); ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < max_checked; ++i) idx.push_back(static_cast<std::size_t>(rng.next_u64() % net.num_params()));
    idx.push_back(0);
    idx.push_back(net.num_params() - 1);
  }
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double saved = net.params()[i];
    net.mutable_params()[i] = saved + h;
    const double up = loss(net, x);
    net.mutable_params()[i] = saved - h;
    const double down = loss(net, x);
    net.mutable_params()[i] = saved;
    worst = std::max(worst, relative_error(grad[i], (up - down) / (2 * h)));
  }
  for (int r = 0; r < x.rows(); ++r) {
    MatrixXd xp = x, xm = x;
    xp(r, 1) += h;
    xm(r, 1) -= h;
    const double numeric = (loss(net, xp) - loss(net, xm)) / (2 * h);
    worst = std::max(worst, relative_error(dx(r, 1), numeric));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, GradientCheckAllShapes) {
  const auto start = std::chrono::steady_clock::now();
  // desk2 and full4 actor and critic shapes, hidden 64x64 and 512x512.
  const std::vector<std::vector<int>> shapes{{24, 64, 64, 3},   {55, 64, 64, 1},   {114, 64, 64, 1},
                                             {54, 64, 64, 6},   {114, 64, 64, 24}, {24, 512, 512, 3},
                                             {114, 512, 512, 1}, {113, 512, 512, 24}, {2, 3, 1}};
  std::uint64_t seed = 10;
  for (const auto& s : shapes) check_gradients(s, s[1] > 100 ? 600 : 3000, seed++);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 60.0);
}

TEST(Mlp, ZeroOutputGradientGivesZeroGradient) {
  Rng rng(4);
  Mlp net({6, 16, 2});
  net.initialize(rng);
  MlpCache cache;
  net.forward(random_matrix(6, 4, rng), cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(cache, MatrixXd::Zero(2, 4), grad);
  for (double g : grad) EXPECT_EQ(g, 0.0);
}

TEST(Mlp, BatchGradientIsSumOfSampleGradients) {
  Rng rng(5);
  Mlp net({6, 16, 2});
  net.initialize(rng);
  const MatrixXd x = random_matrix(6, 2, rng), w = random_matrix(2, 2, rng);
  std::vector<double> both(net.num_params(), 0.0), sum(net.num_params(), 0.0);
  MlpCache c;
  net.forward(x, c);
  net.backward(c, w, both);
  for (int k = 0; k < 2; ++k) {
    MlpCache ck;
    net.forward(MatrixXd(x.col(k)), ck);
    net.backward(ck, MatrixXd(w.col(k)), sum);
  }
  for (std::size_t i = 0; i < both.size(); ++i) EXPECT_NEAR(both[i], sum[i], 1e-12);
}

TEST(Mlp, StaleCacheIsRejected) {
  Rng rng(6);
  Mlp net({3, 4, 1});
  net.initialize(rng);
  MlpCache cache;
  net.forward(random_matrix(3, 2, rng), cache);
  net.mutable_params()[0] += 1.0;
  std::vector<double> grad(net.num_params(), 0.0);
  EXPECT_THROW(net.backward(cache, MatrixXd::Ones(1, 2), grad), InternalError);
  Mlp other({3, 4, 1});
  other.initialize(rng);
  MlpCache fresh;
  net.forward(random_matrix(3, 2, rng), fresh);
  EXPECT_THROW(other.backward(fresh, MatrixXd::Ones(1, 2), grad), InternalError);
}

TEST(GaussianPolicy, MinimumStdCollapsesToMean) {
  Rng rng(7);
  GaussianPolicy pi(24, {64, 64}, 3);
  pi.initialize(rng);
  pi.set_log_std(VectorXd::Constant(3, -100.0));
  EXPECT_EQ(pi.log_std(), VectorXd::Constant(3, kLogStdMin));
  const VectorXd obs = random_matrix(24, 1, rng).col(0);
  const PolicySample s = pi.sample_with_noise(obs, VectorXd::Zero(3));
  EXPECT_EQ(s.action, pi.deterministic_action(obs));
  EXPECT_EQ(s.action, VectorXd(pi.mean(obs).array().tanh()));
}

TEST(GaussianPolicy, ClosedFormEntropy) {
  GaussianPolicy pi(4, {8}, 3, 0.0);
  EXPECT_NEAR(pi.gaussian_entropy(), 1.5 * (1.0 + std::log(2 * std::numbers::pi)), 1e-12);
  pi.set_log_std(Eigen::Vector3d(0.1, -0.3, 0.5));
  EXPECT_NEAR(pi.gaussian_entropy(), 0.3 + 1.5 * (1.0 + std::log(2 * std::numbers::pi)), 1e-12);
}

TEST(GaussianPolicy, MonteCarloLogDensityMatchesEntropy) {
  // E[-log N(x)] over pre-squash samples equals the Gaussian entropy.
  Rng rng(8);
  GaussianPolicy pi(5, {8}, 3, -0.5);
  pi.initialize(rng);
  pi.set_log_std(Eigen::Vector3d(-0.5, 0.2, -1.0));
  const VectorXd obs = random_matrix(5, 1, rng).col(0);
  const VectorXd mu = pi.mean(obs);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    VectorXd x(3);
    for (int k = 0; k < 3; ++k) x[k] = mu[k] + std::exp(pi.log_std()[k]) * rng.normal();
    const double v = -gaussian_log_density(x, mu, pi.log_std());
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(mean, pi.gaussian_entropy(), 3.0 * sd / std::sqrt(double(n)));
}

TEST(GaussianPolicy, LogProbIncludesTanhCorrection) {
  Rng rng(9);
  GaussianPolicy pi(5, {8}, 2, -0.5);
  pi.initialize(rng);
  const VectorXd obs = random_matrix(5, 1, rng).col(0);
  const PolicySample s = pi.sample(obs, rng);
  const VectorXd mu = pi.mean(obs);
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double sigma = std::exp(pi.log_std()[k]);
    const double z = (s.pre_squash[k] - mu[k]) / sigma;
    expected += -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2 * std::numbers::pi);
    expected -= std::log(1.0 - std::tanh(s.pre_squash[k]) * std::tanh(s.pre_squash[k]));
  }
  EXPECT_NEAR(s.log_prob, expected, 1e-10);
  EXPECT_NEAR(pi.log_prob(obs, s.pre_squash), expected, 1e-10);
}

TEST(GaussianPolicy, LogProbFiniteOverWideRange) {
  GaussianPolicy pi(2, {4}, 1, -0.5);
  Rng rng(10);
  pi.initialize(rng);
  const VectorXd obs = VectorXd::Zero(2);
  const double mu = pi.mean(obs)[0], sigma = std::exp(pi.log_std()[0]);
  for (double n = -6.0; n <= 6.0; n += 0.01) {
    ASSERT_TRUE(std::isfinite(pi.log_prob(obs, VectorXd::Constant(1, mu + sigma * n))));
  }
  // Far beyond where 1 - tanh^2 underflows.
  EXPECT_TRUE(std::isfinite(tanh_log_det(VectorXd::Constant(1, 40.0))));
  EXPECT_NEAR(tanh_log_det(VectorXd::Constant(1, 40.0)), 2 * (std::log(2.0) - 40.0), 1e-9);
}

TEST(GaussianPolicy, SeededSamplingIsReproducible) {
  Rng rng(11);
  GaussianPolicy pi(5, {8}, 3);
  pi.initialize(rng);
  const VectorXd obs = random_matrix(5, 1, rng).col(0);
  EXPECT_EQ(pi.sample(obs, std::uint64_t{42}).action, pi.sample(obs, std::uint64_t{42}).action);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  AdamState st(3, 0.01);
  adam_step(p, g, st);
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-6);
  EXPECT_NEAR(p[1], -2.0 + 0.01, 1e-6);
  EXPECT_NEAR(p[2], 3.0 - 0.01, 1e-4);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  AdamState st(2, 0.01);
  adam_step(p, std::vector<double>{0.0, 0.0}, st);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  std::vector<double> p{1.0, -2.0};
  AdamState st(2, 0.01);
  adam_step(p, std::vector<double>{0.1, 0.2}, st);
  const std::vector<double> p_before = p;
  const AdamState st_before = st;
  EXPECT_THROW(adam_step(p, std::vector<double>{0.1, std::nan("")}, st), TrainingError);
  EXPECT_EQ(p, p_before);
  EXPECT_EQ(st.step, st_before.step);
  EXPECT_EQ(st.m, st_before.m);
  EXPECT_THROW(adam_step(p, std::vector<double>{0.1}, st), ConfigurationError);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    std::vector<double> p{0.3, -0.7, 1.1};
    AdamState st(3, 1e-3);
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> g{rng.normal(), rng.normal(), rng.normal()};
      adam_step(p, g, st);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(ClipGradNorm, ScalesOnlyAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 0.5), 5.0);
  EXPECT_NEAR(g[0], 0.3, 1e-15);
  EXPECT_NEAR(g[1], 0.4, 1e-15);
}

TEST(Serialize, PolicyRoundTripIsExact) {
  Rng rng(13);
  GaussianPolicy pi(24, {64, 64}, 3);
  pi.initialize(rng);
  pi.set_log_std(Eigen::Vector3d(-0.1, -0.7, 0.3));
  BinaryWriter w;
  write_policy(w, pi);
  BinaryReader r(w.data());
  const GaussianPolicy back = read_policy(r);
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_EQ(back.log_std(), pi.log_std());
  EXPECT_TRUE(std::equal(back.mean_net().params().begin(), back.mean_net().params().end(),
                         pi.mean_net().params().begin()));
  BinaryWriter again;
  write_policy(again, back);
  EXPECT_EQ(again.data(), w.data());
}

TEST(Serialize, AdamRoundTripAndErrors) {
  AdamState st(4, 3e-4);
  std::vector<double> p(4, 1.0);
  adam_step(p, std::vector<double>{1, 2, 3, 4}, st);
  BinaryWriter w;
  write_adam(w, st);
  BinaryReader r(w.data());
  const AdamState back = read_adam(r);
  EXPECT_EQ(back.m, st.m);
  EXPECT_EQ(back.v, st.v);
  EXPECT_EQ(back.step, st.step);
  EXPECT_EQ(back.lr, st.lr);

  std::string truncated = w.data().substr(0, w.data().size() - 3);
  BinaryReader rt(truncated);
  EXPECT_THROW(read_adam(rt), CorruptFileError);
  std::string bumped = w.data();
  bumped[4] = 9;  // version
  BinaryReader rv(bumped);
  EXPECT_THROW(read_adam(rv), VersionError);
  std::string bad_magic = w.data();
  bad_magic[0] = 'X';
  BinaryReader rm(bad_magic);
  EXPECT_THROW(read_adam(rm), CorruptFileError);
}

}  // namespace
}  // namespace octo::nn
