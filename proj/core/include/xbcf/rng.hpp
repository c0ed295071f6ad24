#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace xbcf {

// Explicit per-chain random stream. Every sampler takes one of these by
// reference; there is no global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for the `index`-th child task of a parent seed.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double normal() { return std_normal_(engine_); }
  double normal(double mean, double variance);
  double uniform() { return unit_(engine_); }
  // Gamma with shape/rate parameterization.
  double gamma(double shape, double rate);
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  // Draws an index with probability proportional to `weights` (non-negative,
  // not all zero).
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace xbcf
