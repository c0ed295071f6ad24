#pragma once

#include "xbcf/types.hpp"

namespace xbcf {

// Precision-weighted summaries of a node: W = sum_i c_i^2 / sigma_i^2 and
// S = sum_i c_i r_i / sigma_i^2, aggregated per treatment group.
struct LeafPrecision {
  double W = 0.0;
  double S = 0.0;
};

LeafPrecision leaf_precision(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                             GroupVariances variances);

// Log marginal likelihood of a node's residuals with the leaf mean integrated
// against N(0, nu), dropping factors that are common to every partition:
//   1/2 [ log(1 / (1 + nu W)) + nu S^2 / (1 + nu W) ].
double leaf_log_marginal(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                         GroupVariances variances, double nu);

struct LeafPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Conjugate Gaussian posterior of a leaf mean: V = (1/nu + W)^-1, mean = V S.
LeafPosterior leaf_posterior(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                             GroupVariances variances, double nu);

// Same posterior computed by folding in the control group first and then the
// treated group. Kept as an independent route for cross-checking.
LeafPosterior leaf_posterior_sequential(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                                        GroupVariances variances, double nu);

// Prior probability that a node at `depth` splits: alpha (1 + depth)^-beta.
double split_prior(double alpha, double beta, int depth);

}  // namespace xbcf
