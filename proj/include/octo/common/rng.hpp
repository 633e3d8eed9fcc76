#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace octo {

/// Portable random stream. std::mt19937_64's output sequence is fixed by the
/// standard, but the <random> distributions are not, so uniform and normal
/// draws are derived here by hand to keep runs bit-identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Seed derived from a base seed and any number of stream labels
  /// (iteration, env index, ...). Uses splitmix64 mixing.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> labels);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace octo
