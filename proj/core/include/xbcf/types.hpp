#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xbcf/matrix.hpp"

namespace xbcf {

// Observed data: outcome, binary treatment, covariates and (optionally) an
// estimated propensity score per unit. Categorical covariates are expected as
// integer codes and are split on as ordered values.
struct Dataset {
  std::vector<double> y;
  std::vector<int> z;
  Matrix X;
  std::optional<std::vector<double>> pi_hat;
  std::vector<std::string> covariate_names;

  std::size_t size() const { return y.size(); }
  std::size_t num_covariates() const { return X.cols(); }

  // Throws ValidationError on shape mismatch, non-binary z, non-finite values
  // or propensities outside (0, 1). With `require_both_groups`, each treatment
  // arm must contain at least one unit.
  void validate(bool require_both_groups) const;

  std::size_t count_treated() const;
};

// Per-group counts and residual sums for the units routed to one node.
struct GroupedSuffStats {
  double n0 = 0.0;
  double n1 = 0.0;
  double s0 = 0.0;
  double s1 = 0.0;

  void add(int group, double residual) {
    if (group == 0) {
      n0 += 1.0;
      s0 += residual;
    } else {
      n1 += 1.0;
      s1 += residual;
    }
  }
  double count() const { return n0 + n1; }

  GroupedSuffStats operator+(const GroupedSuffStats& o) const {
    return {n0 + o.n0, n1 + o.n1, s0 + o.s0, s1 + o.s1};
  }
  GroupedSuffStats operator-(const GroupedSuffStats& o) const {
    return {n0 - o.n0, n1 - o.n1, s0 - o.s0, s1 - o.s1};
  }
  bool operator==(const GroupedSuffStats&) const = default;
};

// Per-group multiplier applied to a leaf mean: `a` for both groups in the
// prognostic forest, `b_z` in the treatment forest.
struct GroupCoeffs {
  double c0 = 1.0;
  double c1 = 1.0;
};

struct GroupVariances {
  double sigma0_sq = 1.0;
  double sigma1_sq = 1.0;
};

// Scale parameters and error variances, plus the outcome standardization.
struct ScaleState {
  double a = 1.0;
  double b0 = -0.5;
  double b1 = 0.5;
  double sigma0_sq = 1.0;
  double sigma1_sq = 1.0;
  double y_mean = 0.0;
  double y_sd = 1.0;

  GroupVariances variances() const { return {sigma0_sq, sigma1_sq}; }
  GroupCoeffs prognostic_coeffs() const { return {a, a}; }
  GroupCoeffs treatment_coeffs() const { return {b0, b1}; }
  double b(int group) const { return group == 0 ? b0 : b1; }

  bool operator==(const ScaleState&) const = default;
};

struct Hyperparams {
  int num_trees_mu = 30;   // L
  int num_trees_tau = 10;  // K
  int sweeps = 40;         // I
  int burnin = 15;
  double alpha = 0.95;
  double beta = 1.25;
  // Leaf prior variances on the standardized scale; non-positive means
  // "use the default" (0.6 / L and 0.3 / K).
  double nu_mu = 0.0;
  double nu_tau = 0.0;
  double kappa0 = 3.0;
  double kappa1 = 3.0;
  // Chosen so that the inverse-Gamma prior mode s / (kappa + 2) equals 1.
  double s0_prior = 5.0;
  double s1_prior = 5.0;
  int max_cutpoints = 100;
  int min_node_size = 5;
  int max_depth = 20;
  std::uint64_t seed = 1;

  double leaf_variance_mu() const { return nu_mu > 0.0 ? nu_mu : 0.6 / num_trees_mu; }
  double leaf_variance_tau() const { return nu_tau > 0.0 ? nu_tau : 0.3 / num_trees_tau; }

  void validate() const;

  bool operator==(const Hyperparams&) const = default;
};

}  // namespace xbcf
