#include "xbcf/types.hpp"

#include <cmath>
#include <string>

#include "xbcf/error.hpp"

namespace xbcf {

void Dataset::validate(bool require_both_groups) const {
  const std::size_t n = y.size();
  if (z.size() != n || X.rows() != n) {
    throw ValidationError("dataset: y, z and X must have the same number of rows (y=" +
                          std::to_string(n) + ", z=" + std::to_string(z.size()) +
                          ", X=" + std::to_string(X.rows()) + ")");
  }
  if (pi_hat && pi_hat->size() != n) {
    throw ValidationError("dataset: propensity vector has length " +
                          std::to_string(pi_hat->size()) + ", expected " + std::to_string(n));
  }
  if (!covariate_names.empty() && covariate_names.size() != X.cols()) {
    throw ValidationError("dataset: covariate name count does not match X columns");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (z[i] != 0 && z[i] != 1) {
      throw ValidationError("dataset: treatment at row " + std::to_string(i) + " is " +
                            std::to_string(z[i]) + ", expected 0 or 1");
    }
    if (!std::isfinite(y[i])) {
      throw ValidationError("dataset: non-finite outcome at row " + std::to_string(i));
    }
    for (double v : X.row(i)) {
      if (!std::isfinite(v)) {
        throw ValidationError("dataset: non-finite covariate at row " + std::to_string(i));
      }
    }
    if (pi_hat) {
      const double p = (*pi_hat)[i];
      if (!std::isfinite(p) || p <= 0.0 || p >= 1.0) {
        throw ValidationError("dataset: propensity at row " + std::to_string(i) +
                              " must lie in (0, 1)");
      }
    }
  }
  if (require_both_groups) {
    const std::size_t treated = count_treated();
    if (treated == 0 || treated == n) {
      throw ValidationError("dataset: both treatment groups need at least one unit");
    }
  }
}

std::size_t Dataset::count_treated() const {
  std::size_t treated = 0;
  for (int zi : z) treated += zi == 1 ? 1 : 0;
  return treated;
}

void Hyperparams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ValidationError("beta must be non-negative");
  if (num_trees_mu < 1 || num_trees_tau < 1) throw ValidationError("tree counts must be >= 1");
  if (sweeps < 1) throw ValidationError("sweeps must be >= 1");
  if (burnin < 0 || burnin >= sweeps) throw ValidationError("burnin must lie in [0, sweeps)");
  if (!(leaf_variance_mu() > 0.0) || !(leaf_variance_tau() > 0.0)) {
    throw ValidationError("leaf prior variances must be positive");
  }
  if (!(kappa0 > 0.0 && kappa1 > 0.0 && s0_prior > 0.0 && s1_prior > 0.0)) {
    throw ValidationError("inverse-Gamma hyperparameters must be positive");
  }
  if (max_cutpoints < 1) throw ValidationError("max_cutpoints must be >= 1");
  if (min_node_size < 1) throw ValidationError("min_node_size must be >= 1");
  if (max_depth < 0) throw ValidationError("max_depth must be >= 0");
}

}  // namespace xbcf
