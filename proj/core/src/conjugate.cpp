#include "xbcf/conjugate.hpp"

#include <cmath>

#include "xbcf/error.hpp"

namespace xbcf {
namespace {

void check_inputs(const GroupedSuffStats& stats, GroupCoeffs coeffs, GroupVariances variances,
                  double nu) {
  const bool finite = std::isfinite(stats.n0) && std::isfinite(stats.n1) &&
                      std::isfinite(stats.s0) && std::isfinite(stats.s1) &&
                      std::isfinite(coeffs.c0) && std::isfinite(coeffs.c1) &&
                      std::isfinite(variances.sigma0_sq) && std::isfinite(variances.sigma1_sq) &&
                      std::isfinite(nu);
  if (!finite) throw ValidationError("leaf model: non-finite input");
  if (!(variances.sigma0_sq > 0.0 && variances.sigma1_sq > 0.0 && nu > 0.0)) {
    throw ValidationError("leaf model: variances must be positive");
  }
  if (stats.n0 < 0.0 || stats.n1 < 0.0) throw ValidationError("leaf model: negative count");
}

}  // namespace

LeafPrecision leaf_precision(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                             GroupVariances variances) {
  const double w0 = coeffs.c0 / variances.sigma0_sq;
  const double w1 = coeffs.c1 / variances.sigma1_sq;
  return {stats.n0 * coeffs.c0 * w0 + stats.n1 * coeffs.c1 * w1, stats.s0 * w0 + stats.s1 * w1};
}

double leaf_log_marginal(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                         GroupVariances variances, double nu) {
  check_inputs(stats, coeffs, variances, nu);
  const auto [W, S] = leaf_precision(stats, coeffs, variances);
  const double denom = 1.0 + nu * W;
  return 0.5 * (-std::log(denom) + nu * S * S / denom);
}

LeafPosterior leaf_posterior(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                             GroupVariances variances, double nu) {
  check_inputs(stats, coeffs, variances, nu);
  const auto [W, S] = leaf_precision(stats, coeffs, variances);
  const double V = 1.0 / (1.0 / nu + W);
  return {V * S, V};
}

LeafPosterior leaf_posterior_sequential(const GroupedSuffStats& stats, GroupCoeffs coeffs,
                                        GroupVariances variances, double nu) {
  check_inputs(stats, coeffs, variances, nu);
  // Control group: effective observations r / c0 with variance (sigma0 / c0)^2.
  const double prec0 = stats.n0 * coeffs.c0 * coeffs.c0 / variances.sigma0_sq;
  const double v0 = 1.0 / (1.0 / nu + prec0);
  const double m0 = v0 * (coeffs.c0 * stats.s0 / variances.sigma0_sq);
  // Treated group folded in with the control posterior as the prior.
  const double prec1 = stats.n1 * coeffs.c1 * coeffs.c1 / variances.sigma1_sq;
  const double v = 1.0 / (1.0 / v0 + prec1);
  const double m = v * (m0 / v0 + coeffs.c1 * stats.s1 / variances.sigma1_sq);
  return {m, v};
}

double split_prior(double alpha, double beta, int depth) {
  return alpha * std::pow(1.0 + depth, -beta);
}

}  // namespace xbcf
