#include "xbcf/rng.hpp"

#include <cassert>
#include <cmath>
#include <numeric>

namespace xbcf {

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  std::uint64_t derived = 0;
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  derived = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return Rng(derived);
}

double Rng::normal(double mean, double variance) {
  return mean + std::sqrt(variance) * std_normal_(engine_);
}

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  assert(n > 0);
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  assert(total > 0.0);
  const double target = uniform() * total;
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    running += weights[k];
    last_positive = k;
    if (target < running) return k;
  }
  // Only reached through rounding in the running sum.
  return last_positive;
}

}  // namespace xbcf
