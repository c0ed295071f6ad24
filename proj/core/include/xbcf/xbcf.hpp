#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xbcf/draws.hpp"
#include "xbcf/gfr.hpp"
#include "xbcf/rng.hpp"
#include "xbcf/types.hpp"

namespace xbcf {

// Standardized outcome and the split-variable layouts of both forests.
struct PreparedData {
  std::vector<double> y;  // (y - y_mean) / y_sd
  std::vector<int> z;
  FeatureMatrix mu_features;   // X plus the propensity column
  FeatureMatrix tau_features;  // X only
  double y_mean = 0.0;
  double y_sd = 1.0;

  std::size_t size() const { return y.size(); }
};

// Validates `data` (propensity required) and standardizes y. Explicit
// constants override the sample mean and sd, e.g. when resuming from a fit.
PreparedData prepare_data(const Dataset& data,
                          std::optional<std::pair<double, double>> standardization = {});

// Per-tree fitted values of both forests and the derived residual vectors
//   r = y - a mu_fit - b_z tau_fit,  v = y - a mu_fit,  t = y - b_z tau_fit
// on the standardized scale.
class ResidualState {
 public:
  ResidualState(std::span<const double> y, std::span<const int> z, std::size_t num_mu_trees,
                std::size_t num_tau_trees);

  void set_mu_tree_fit(std::size_t l, std::span<const double> fit);
  void set_tau_tree_fit(std::size_t k, std::span<const double> fit);
  // Recomputes r, v, t from the forest sums and the current scales.
  void refresh(const ScaleState& scale);

  std::vector<double> mu_partial_residual(std::size_t l, const ScaleState& scale) const;
  std::vector<double> tau_partial_residual(std::size_t k, const ScaleState& scale) const;

  std::span<const double> mu_fit() const { return mu_fit_; }
  std::span<const double> tau_fit() const { return tau_fit_; }
  std::span<const double> mu_tree_fit(std::size_t l) const { return mu_tree_fits_[l]; }
  std::span<const double> tau_tree_fit(std::size_t k) const { return tau_tree_fits_[k]; }
  std::span<const double> total_residual() const { return r_; }
  std::span<const double> prognostic_residual() const { return v_; }
  std::span<const double> treatment_residual() const { return t_; }

 private:
  std::span<const double> y_;
  std::span<const int> z_;
  std::vector<std::vector<double>> mu_tree_fits_;
  std::vector<std::vector<double>> tau_tree_fits_;
  std::vector<double> mu_fit_;
  std::vector<double> tau_fit_;
  std::vector<double> r_;
  std::vector<double> v_;
  std::vector<double> t_;
};

struct NormalPosterior {
  double mean = 0.0;
  double variance = 1.0;
};

// Conjugate posterior of a ~ N(0, 1) regressing t on the prognostic fit,
// folding in control then treated units.
NormalPosterior posterior_a(std::span<const double> t_residual, std::span<const double> mu_fit,
                            std::span<const int> z, GroupVariances variances);
double update_a(std::span<const double> t_residual, std::span<const double> mu_fit,
                std::span<const int> z, GroupVariances variances, Rng& rng);

// Independent conjugate posteriors of b0, b1 ~ N(0, 1/2) regressing v on the
// treatment fit within each group.
std::pair<NormalPosterior, NormalPosterior> posterior_b(std::span<const double> v_residual,
                                                        std::span<const double> tau_fit,
                                                        std::span<const int> z,
                                                        GroupVariances variances);
std::pair<double, double> update_b(std::span<const double> v_residual,
                                   std::span<const double> tau_fit, std::span<const int> z,
                                   GroupVariances variances, Rng& rng);

struct GammaPosterior {
  double shape = 1.0;
  double rate = 1.0;
};

// Posterior of the precision 1 / sigma_z^2 for each group.
std::pair<GammaPosterior, GammaPosterior> posterior_sigmas(std::span<const double> r,
                                                           std::span<const int> z,
                                                           const Hyperparams& hp);
std::pair<double, double> update_sigmas(std::span<const double> r, std::span<const int> z,
                                        const Hyperparams& hp, Rng& rng);

// Draws a, then (b0, b1), then both variances, each conditional on the
// latest values, and refreshes the residuals.
void draw_scale_parameters(ResidualState& residuals, ScaleState& scale, std::span<const int> z,
                           const Hyperparams& hp, Rng& rng);

// Instrumentation hooks for tests and diagnostics.
class FitObserver {
 public:
  virtual ~FitObserver() = default;
  virtual void on_tree_update(ForestRole /*role*/, std::size_t /*index*/, const Forest& /*mu*/,
                              const Forest& /*tau*/, const ResidualState& /*residuals*/,
                              const ScaleState& /*scale*/, const PreparedData& /*data*/) {}
  virtual void on_parameter_draw(const ScaleState& /*scale*/) {}
  virtual void on_sweep_end(int /*sweep*/) {}
};

struct FitOptions {
  // Starting a, b0, b1 and variances; the standardization fields are ignored.
  std::optional<ScaleState> initial_scale;
  FitObserver* observer = nullptr;
};

// Runs `hp.sweeps` sweeps of the two-forest grow-from-root sampler and
// returns one snapshot per sweep (the first `hp.burnin` flagged).
PosteriorDraws fit(const Dataset& data, const Hyperparams& hp, const FitOptions& options = {});

// Treatment-effect draws (b1 - b0) tau(x) on the outcome scale; one row per
// kept draw, one column per row of X.
Matrix cate_draws(const PosteriorDraws& draws, const Matrix& X);

struct CateSummary {
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> ate_draws;
  double ate_mean = 0.0;
  double ate_lo = 0.0;
  double ate_hi = 0.0;
};

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

CateSummary summarize_cate_draws(const Matrix& draws, double level);
CateSummary summarize(const PosteriorDraws& draws, const Matrix& X_eval, double level = 0.95);

}  // namespace xbcf
