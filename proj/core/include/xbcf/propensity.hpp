#pragma once

#include <span>
#include <vector>

#include "xbcf/matrix.hpp"

namespace xbcf {

struct PropensityFit {
  std::vector<double> pi;            // clipped to [0.001, 0.999]
  std::vector<double> coefficients;  // intercept first
  int iterations = 0;
  bool converged = false;
  std::size_t clipped = 0;

  // Set whenever the Newton iterations did not converge.
  bool warning() const { return !converged; }
};

// Logistic regression of z on [1, X] by Newton / IRLS: at most 50 iterations,
// stop when the largest coefficient change is below 1e-8, with a 1e-6 ridge on
// the normal equations.
PropensityFit estimate_propensity(const Matrix& X, std::span<const int> z);

}  // namespace xbcf
