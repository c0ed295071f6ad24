#include "xbcf/xbcf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xbcf/error.hpp"

namespace xbcf {

PreparedData prepare_data(const Dataset& data,
                          std::optional<std::pair<double, double>> standardization) {
  data.validate(/*require_both_groups=*/true);
  if (!data.pi_hat) throw ValidationError("fit: a propensity score column is required");
  const std::size_t n = data.size();
  if (n < 2) throw ValidationError("fit: at least two units are required");

  PreparedData out;
  if (standardization) {
    out.y_mean = standardization->first;
    out.y_sd = standardization->second;
  } else {
    out.y_mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : data.y) ss += (v - out.y_mean) * (v - out.y_mean);
    out.y_sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  if (!(out.y_sd > 0.0) || !std::isfinite(out.y_sd)) {
    throw ValidationError("fit: outcome has zero variance");
  }
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.y[i] = (data.y[i] - out.y_mean) / out.y_sd;
  out.z = data.z;
  out.mu_features = FeatureMatrix(data.X, std::span<const double>(*data.pi_hat));
  out.tau_features = FeatureMatrix(data.X);
  return out;
}

ResidualState::ResidualState(std::span<const double> y, std::span<const int> z,
                             std::size_t num_mu_trees, std::size_t num_tau_trees)
    : y_(y),
      z_(z),
      mu_tree_fits_(num_mu_trees, std::vector<double>(y.size(), 0.0)),
      tau_tree_fits_(num_tau_trees, std::vector<double>(y.size(), 0.0)),
      mu_fit_(y.size(), 0.0),
      tau_fit_(y.size(), 0.0),
      r_(y.begin(), y.end()),
      v_(y.begin(), y.end()),
      t_(y.begin(), y.end()) {}

void ResidualState::set_mu_tree_fit(std::size_t l, std::span<const double> fit) {
  auto& old = mu_tree_fits_[l];
  for (std::size_t i = 0; i < old.size(); ++i) {
    mu_fit_[i] += fit[i] - old[i];
    old[i] = fit[i];
  }
}

void ResidualState::set_tau_tree_fit(std::size_t k, std::span<const double> fit) {
  auto& old = tau_tree_fits_[k];
  for (std::size_t i = 0; i < old.size(); ++i) {
    tau_fit_[i] += fit[i] - old[i];
    old[i] = fit[i];
  }
}

void ResidualState::refresh(const ScaleState& scale) {
  for (std::size_t i = 0; i < y_.size(); ++i) {
    const double prog = scale.a * mu_fit_[i];
    const double treat = scale.b(z_[i]) * tau_fit_[i];
    v_[i] = y_[i] - prog;
    t_[i] = y_[i] - treat;
    r_[i] = y_[i] - prog - treat;
  }
}

std::vector<double> ResidualState::mu_partial_residual(std::size_t l,
                                                       const ScaleState& scale) const {
  std::vector<double> out(r_);
  const auto& fit = mu_tree_fits_[l];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale.a * fit[i];
  return out;
}

std::vector<double> ResidualState::tau_partial_residual(std::size_t k,
                                                        const ScaleState& scale) const {
  std::vector<double> out(r_);
  const auto& fit = tau_tree_fits_[k];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale.b(z_[i]) * fit[i];
  return out;
}

NormalPosterior posterior_a(std::span<const double> t_residual, std::span<const double> mu_fit,
                            std::span<const int> z, GroupVariances variances) {
  double mm0 = 0.0, tm0 = 0.0, mm1 = 0.0, tm1 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0) {
      mm0 += mu_fit[i] * mu_fit[i];
      tm0 += t_residual[i] * mu_fit[i];
    } else {
      mm1 += mu_fit[i] * mu_fit[i];
      tm1 += t_residual[i] * mu_fit[i];
    }
  }
  const double nu0 = 1.0 / (1.0 + mm0 / variances.sigma0_sq);
  const double beta0 = tm0 / variances.sigma0_sq * nu0;
  const double nu = 1.0 / (1.0 / nu0 + mm1 / variances.sigma1_sq);
  const double beta = (beta0 / nu0 + tm1 / variances.sigma1_sq) * nu;
  return {beta, nu};
}

double update_a(std::span<const double> t_residual, std::span<const double> mu_fit,
                std::span<const int> z, GroupVariances variances, Rng& rng) {
  const NormalPosterior post = posterior_a(t_residual, mu_fit, z, variances);
  return rng.normal(post.mean, post.variance);
}

std::pair<NormalPosterior, NormalPosterior> posterior_b(std::span<const double> v_residual,
                                                        std::span<const double> tau_fit,
                                                        std::span<const int> z,
                                                        GroupVariances variances) {
  double tt[2] = {0.0, 0.0};
  double vt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    tt[z[i]] += tau_fit[i] * tau_fit[i];
    vt[z[i]] += v_residual[i] * tau_fit[i];
  }
  const double var[2] = {variances.sigma0_sq, variances.sigma1_sq};
  NormalPosterior post[2];
  for (int g = 0; g < 2; ++g) {
    const double nu = 1.0 / (2.0 + tt[g] / var[g]);
    post[g] = {vt[g] / var[g] * nu, nu};
  }
  return {post[0], post[1]};
}

std::pair<double, double> update_b(std::span<const double> v_residual,
                                   std::span<const double> tau_fit, std::span<const int> z,
                                   GroupVariances variances, Rng& rng) {
  const auto [p0, p1] = posterior_b(v_residual, tau_fit, z, variances);
  const double b0 = rng.normal(p0.mean, p0.variance);
  const double b1 = rng.normal(p1.mean, p1.variance);
  return {b0, b1};
}

std::pair<GammaPosterior, GammaPosterior> posterior_sigmas(std::span<const double> r,
                                                           std::span<const int> z,
                                                           const Hyperparams& hp) {
  double n[2] = {0.0, 0.0};
  double rr[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    n[z[i]] += 1.0;
    rr[z[i]] += r[i] * r[i];
  }
  return {GammaPosterior{(n[0] + hp.kappa0) / 2.0, (rr[0] + hp.s0_prior) / 2.0},
          GammaPosterior{(n[1] + hp.kappa1) / 2.0, (rr[1] + hp.s1_prior) / 2.0}};
}

std::pair<double, double> update_sigmas(std::span<const double> r, std::span<const int> z,
                                        const Hyperparams& hp, Rng& rng) {
  const auto [g0, g1] = posterior_sigmas(r, z, hp);
  double draws[2];
  const GammaPosterior* posts[2] = {&g0, &g1};
  for (int g = 0; g < 2; ++g) {
    double precision = 0.0;
    // A zero precision draw is possible only through underflow; redraw.
    do {
      precision = rng.gamma(posts[g]->shape, posts[g]->rate);
    } while (!(precision > 0.0) || !std::isfinite(1.0 / precision));
    draws[g] = 1.0 / precision;
  }
  return {draws[0], draws[1]};
}

void draw_scale_parameters(ResidualState& residuals, ScaleState& scale, std::span<const int> z,
                           const Hyperparams& hp, Rng& rng) {
  residuals.refresh(scale);
  scale.a = update_a(residuals.treatment_residual(), residuals.mu_fit(), z, scale.variances(), rng);
  residuals.refresh(scale);
  std::tie(scale.b0, scale.b1) =
      update_b(residuals.prognostic_residual(), residuals.tau_fit(), z, scale.variances(), rng);
  residuals.refresh(scale);
  std::tie(scale.sigma0_sq, scale.sigma1_sq) =
      update_sigmas(residuals.total_residual(), z, hp, rng);
  if (!(scale.sigma0_sq > 0.0 && scale.sigma1_sq > 0.0)) {
    throw std::logic_error("non-positive variance draw");
  }
}

PosteriorDraws fit(const Dataset& data, const Hyperparams& hp, const FitOptions& options) {
  hp.validate();
  const PreparedData prepared = prepare_data(data);
  const std::size_t n = prepared.size();
  const auto L = static_cast<std::size_t>(hp.num_trees_mu);
  const auto K = static_cast<std::size_t>(hp.num_trees_tau);

  ScaleState scale;
  if (options.initial_scale) scale = *options.initial_scale;
  scale.y_mean = prepared.y_mean;
  scale.y_sd = prepared.y_sd;

  const double y_bar =
      std::accumulate(prepared.y.begin(), prepared.y.end(), 0.0) / static_cast<double>(n);
  Forest mu_forest{ForestRole::prognostic, std::vector<Tree>(L, Tree(y_bar / static_cast<double>(L)))};
  Forest tau_forest{ForestRole::treatment, std::vector<Tree>(K, Tree(0.0))};

  ResidualState residuals(prepared.y, prepared.z, L, K);
  std::vector<double> fit_buffer(n, y_bar / static_cast<double>(L));
  for (std::size_t l = 0; l < L; ++l) residuals.set_mu_tree_fit(l, fit_buffer);
  residuals.refresh(scale);

  Rng rng(hp.seed);
  const GrowOptions grow = GrowOptions::from(hp);
  const double nu_mu = hp.leaf_variance_mu();
  const double nu_tau = hp.leaf_variance_tau();

  PosteriorDraws out;
  out.hp = hp;
  out.num_covariates = data.num_covariates();
  out.covariate_names = data.covariate_names;
  out.draws.reserve(static_cast<std::size_t>(hp.sweeps));

  auto after_tree = [&](ForestRole role, std::size_t index) {
    draw_scale_parameters(residuals, scale, prepared.z, hp, rng);
    if (options.observer) {
      options.observer->on_parameter_draw(scale);
      options.observer->on_tree_update(role, index, mu_forest, tau_forest, residuals, scale,
                                       prepared);
    }
  };

  for (int sweep = 0; sweep < hp.sweeps; ++sweep) {
    for (std::size_t l = 0; l < L; ++l) {
      const std::vector<double> partial = residuals.mu_partial_residual(l, scale);
      const LeafModel leaf{scale.prognostic_coeffs(), scale.variances(), nu_mu};
      mu_forest.trees[l] = grow_from_root(partial, prepared.mu_features, prepared.z, leaf, grow,
                                          rng, fit_buffer);
      residuals.set_mu_tree_fit(l, fit_buffer);
      after_tree(ForestRole::prognostic, l);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const std::vector<double> partial = residuals.tau_partial_residual(k, scale);
      const LeafModel leaf{scale.treatment_coeffs(), scale.variances(), nu_tau};
      tau_forest.trees[k] = grow_from_root(partial, prepared.tau_features, prepared.z, leaf, grow,
                                           rng, fit_buffer);
      residuals.set_tau_tree_fit(k, fit_buffer);
      after_tree(ForestRole::treatment, k);
    }
    out.draws.push_back(Draw{mu_forest, tau_forest, scale, sweep < hp.burnin, 0});
    if (options.observer) options.observer->on_sweep_end(sweep);
  }
  return out;
}

Matrix cate_draws(const PosteriorDraws& draws, const Matrix& X) {
  if (X.cols() != draws.num_covariates) {
    throw ValidationError("cate_draws: evaluation data has " + std::to_string(X.cols()) +
                          " covariates, model expects " + std::to_string(draws.num_covariates));
  }
  const auto kept = draws.kept();
  Matrix out(kept.size(), X.rows());
  for (std::size_t s = 0; s < kept.size(); ++s) {
    const Draw& d = *kept[s];
    const double scale = (d.scale.b1 - d.scale.b0) * d.scale.y_sd;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double tau = 0.0;
      for (const Tree& tree : d.treatment.trees) tau += tree.predict(X.row(i));
      out(s, i) = scale * tau;
    }
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CateSummary summarize_cate_draws(const Matrix& draws, double level) {
  if (draws.rows() == 0) throw ValidationError("summarize: no kept draws");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("summarize: level must lie in (0, 1)");
  const double p_lo = (1.0 - level) / 2.0;
  const double p_hi = 1.0 - p_lo;
  const std::size_t S = draws.rows();
  const std::size_t n = draws.cols();

  CateSummary out;
  out.mean.resize(n);
  out.lo.resize(n);
  out.hi.resize(n);
  std::vector<double> column(S);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      column[s] = draws(s, i);
      sum += column[s];
    }
    out.mean[i] = sum / static_cast<double>(S);
    out.lo[i] = quantile(column, p_lo);
    out.hi[i] = quantile(column, p_hi);
  }
  out.ate_draws.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = draws.row(s);
    out.ate_draws[s] = n == 0 ? 0.0 : std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n);
  }
  out.ate_mean = std::accumulate(out.ate_draws.begin(), out.ate_draws.end(), 0.0) / static_cast<double>(S);
  out.ate_lo = quantile(out.ate_draws, p_lo);
  out.ate_hi = quantile(out.ate_draws, p_hi);
  return out;
}

CateSummary summarize(const PosteriorDraws& draws, const Matrix& X_eval, double level) {
  if (draws.num_kept() == 0) throw ValidationError("summarize: no kept draws");
  return summarize_cate_draws(cate_draws(draws, X_eval), level);
}

}  // namespace xbcf
