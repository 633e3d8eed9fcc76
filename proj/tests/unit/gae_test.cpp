#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/marl/gae.hpp"

namespace octo::marl {
namespace {

// Brute force: A_t = sum_k (gamma lambda)^k delta_{t+k}, truncated at the
// first done flag.
std::vector<double> brute_force(const std::vector<double>& r, const std::vector<double>& v,
                                const std::vector<std::uint8_t>& done, double bootstrap, double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : bootstrap;
    delta[t] = r[t] + gamma * next * (done[t] ? 0.0 : 1.0) - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += w * delta[k];
      if (done[k]) break;
      w *= gamma * lambda;
    }
  }
  return adv;
}

TEST(Gae, ThreeStepToy) {
  const std::vector<double> r{1, 0, 1}, v{0.5, 0.5, 0.5};
  const double g = 0.99, l = 0.95;
  const double d2 = 1 + g * 0 - 0.5;
  const double d1 = 0 + g * 0.5 - 0.5;
  const double d0 = 1 + g * 0.5 - 0.5;
  const double a2 = d2, a1 = d1 + g * l * a2, a0 = d0 + g * l * a1;
  const GaeResult res = compute_gae(r, v, {}, 0.0, g, l);
  EXPECT_NEAR(res.advantages[0], a0, 1e-15);
  EXPECT_NEAR(res.advantages[1], a1, 1e-15);
  EXPECT_NEAR(res.advantages[2], a2, 1e-15);
  for (int t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(res.returns[t], res.advantages[t] + v[static_cast<std::size_t>(t)]);
}

TEST(Gae, LambdaOneIsDiscountedReturnMinusValue) {
  Rng rng(1);
  const std::size_t n = 12;
  std::vector<double> r(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rng.normal();
    v[i] = rng.normal();
  }
  const double bootstrap = 0.7, g = 0.97;
  const GaeResult res = compute_gae(r, v, {}, bootstrap, g, 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    double ret = 0.0, w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      ret += w * r[k];
      w *= g;
    }
    ret += w * bootstrap;
    EXPECT_NEAR(res.advantages[static_cast<Eigen::Index>(t)], ret - v[t], 1e-12);
  }
}

TEST(Gae, LambdaZeroIsTdError) {
  const std::vector<double> r{0.3, -1.0, 2.0, 0.5}, v{1.0, 0.2, -0.4, 0.9};
  const GaeResult res = compute_gae(r, v, {}, 0.25, 0.9, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    const double next = t + 1 < 4 ? v[t + 1] : 0.25;
    EXPECT_NEAR(res.advantages[static_cast<Eigen::Index>(t)], r[t] + 0.9 * next - v[t], 1e-15);
  }
}

TEST(Gae, MatchesBruteForceOnRandomEpisodes) {
  Rng rng(2);
  const double lambdas[] = {0.0, 1.0, 0.95, 0.5};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(3 + rng.next_u64() % 18);
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> done(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.normal();
      v[i] = rng.normal();
      done[i] = rng.uniform() < 0.15 ? 1 : 0;
    }
    const double bootstrap = rng.normal(), g = rng.uniform(0.8, 0.999);
    const double l = lambdas[trial % 4];
    const GaeResult res = compute_gae(r, v, done, bootstrap, g, l);
    const std::vector<double> ref = brute_force(r, v, done, bootstrap, g, l);
    for (std::size_t t = 0; t < n; ++t) {
      worst = std::max(worst, std::abs(res.advantages[static_cast<Eigen::Index>(t)] - ref[t]));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Gae, RejectsBadSeries) {
  const std::vector<double> empty;
  EXPECT_THROW(compute_gae(empty, empty, {}, 0.0, 0.99, 0.95), InputError);
  const std::vector<double> r{1, 2}, v{1};
  EXPECT_THROW(compute_gae(r, v, {}, 0.0, 0.99, 0.95), InputError);
  const std::vector<std::uint8_t> done{0};
  EXPECT_THROW(compute_gae(r, r, done, 0.0, 0.99, 0.95), InputError);
}

TEST(NormalizeAdvantages, ZeroMeanUnitStd) {
  Rng rng(3);
  std::vector<double> a(400);
  for (double& x : a) x = 5.0 + 3.0 * rng.normal();
  normalize_advantages(a);
  double mean = 0.0, sq = 0.0;
  for (double x : a) mean += x;
  mean /= double(a.size());
  for (double x : a) sq += (x - mean) * (x - mean);
  EXPECT_LT(std::abs(mean), 1e-10);
  EXPECT_NEAR(std::sqrt(sq / double(a.size())), 1.0, 1e-6);
  std::vector<double> flat(10, 2.0);
  normalize_advantages(flat);
  for (double x : flat) EXPECT_EQ(x, 0.0);
}

}  // namespace
}  // namespace octo::marl
