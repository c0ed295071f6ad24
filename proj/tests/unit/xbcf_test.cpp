#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "xbcf/error.hpp"
#include "xbcf/simulation.hpp"
#include "xbcf/xbcf.hpp"

using namespace xbcf;

namespace {

std::vector<int> zeros(std::size_t n) { return std::vector<int>(n, 0); }

Dataset noise_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.X = Matrix(n, 2);
  d.pi_hat = std::vector<double>(n, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    d.X(i, 0) = rng.normal();
    d.X(i, 1) = rng.normal();
    d.z.push_back(rng.bernoulli(0.5) ? 1 : 0);
    d.y.push_back(rng.normal());
  }
  return d;
}

}  // namespace

TEST(UpdateA, EmptyDataIsPrior) {
  const auto p = posterior_a({}, {}, {}, {1, 1});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 1.0);
}

TEST(UpdateA, ZeroFitIsPrior) {
  const std::vector<double> t{1, -2, 3}, mu{0, 0, 0};
  const std::vector<int> z{0, 1, 1};
  const auto p = posterior_a(t, mu, z, {0.7, 2.0});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 1.0);
}

TEST(UpdateA, SingleControlObservation) {
  const std::vector<double> t{4}, mu{2};
  const auto p = posterior_a(t, mu, zeros(1), {1, 1});
  EXPECT_NEAR(p.variance, 0.2, 1e-15);
  EXPECT_NEAR(p.mean, 1.6, 1e-15);
}

TEST(UpdateA, MatchesWeightedLeastSquaresPosterior) {
  // Oracle: posterior of a with prior N(0,1) and weights 1/sigma_z^2,
  // written as the usual (X'WX + 1)^-1 X'Wy.
  const std::vector<double> t{1.0, 0.5, -0.3, 2.2}, mu{0.4, -1.0, 0.7, 1.5};
  const std::vector<int> z{0, 1, 0, 1};
  const GroupVariances v{0.5, 2.0};
  double xwx = 0, xwy = 0;
  for (int i = 0; i < 4; ++i) {
    const double w = 1.0 / (z[i] ? v.sigma1_sq : v.sigma0_sq);
    xwx += w * mu[i] * mu[i];
    xwy += w * mu[i] * t[i];
  }
  const auto p = posterior_a(t, mu, z, v);
  EXPECT_NEAR(p.variance, 1.0 / (xwx + 1.0), 1e-14);
  EXPECT_NEAR(p.mean, xwy / (xwx + 1.0), 1e-14);
}

TEST(UpdateB, SingleControlObservation) {
  const std::vector<double> v{1}, tau{1};
  const auto [b0, b1] = posterior_b(v, tau, zeros(1), {1, 1});
  EXPECT_NEAR(b0.variance, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(b0.mean, 1.0 / 3.0, 1e-15);
  // No treated units: prior.
  EXPECT_EQ(b1.mean, 0.0);
  EXPECT_EQ(b1.variance, 0.5);
}

TEST(UpdateB, ZeroFitIsPrior) {
  const std::vector<double> v{1, 2}, tau{0, 0};
  const std::vector<int> z{0, 1};
  const auto [b0, b1] = posterior_b(v, tau, z, {1, 1});
  EXPECT_EQ(b0.variance, 0.5);
  EXPECT_EQ(b1.variance, 0.5);
  EXPECT_EQ(b0.mean, 0.0);
  EXPECT_EQ(b1.mean, 0.0);
}

TEST(UpdateB, DrawsFollowPosterior) {
  const std::vector<double> v{1}, tau{1};
  Rng rng(1);
  double sum = 0, sq = 0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const double b0 = update_b(v, tau, zeros(1), {1, 1}, rng).first;
    sum += b0;
    sq += b0 * b0;
  }
  const double mean = sum / N;
  EXPECT_NEAR(mean, 1.0 / 3.0, 0.02);
  EXPECT_NEAR(sq / N - mean * mean, 1.0 / 3.0, 0.02);  // variance, not its square
}

TEST(UpdateSigmas, NoDataIsPrior) {
  Hyperparams hp;
  const std::vector<double> r{0.3};
  const std::vector<int> z{1};
  const auto [g0, g1] = posterior_sigmas(r, z, hp);
  EXPECT_EQ(g0.shape, hp.kappa0 / 2);
  EXPECT_EQ(g0.rate, hp.s0_prior / 2);
  EXPECT_EQ(g1.shape, (1 + hp.kappa1) / 2);
  EXPECT_NEAR(g1.rate, (0.09 + hp.s1_prior) / 2, 1e-15);
}

TEST(UpdateSigmas, ConcentratesAtLargeN) {
  Hyperparams hp;
  hp.s0_prior = hp.s1_prior = 1.0;
  Rng data(7);
  std::vector<double> r(10000);
  for (double& x : r) x = data.normal();
  const auto z = zeros(r.size());
  const auto [g0, g1] = posterior_sigmas(r, z, hp);
  const double inv_gamma_mean = g0.rate / (g0.shape - 1.0);
  EXPECT_GE(inv_gamma_mean, 0.9);
  EXPECT_LE(inv_gamma_mean, 1.1);
  Rng rng(8);
  double sum = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto [s0, s1] = update_sigmas(r, z, hp, rng);
    ASSERT_GT(s0, 0.0);
    ASSERT_GT(s1, 0.0);
    sum += s0;
  }
  EXPECT_GE(sum / 2000, 0.9);
  EXPECT_LE(sum / 2000, 1.1);
}

TEST(Fit, RejectsSingleGroup) {
  Dataset d = noise_data(30, 1);
  std::fill(d.z.begin(), d.z.end(), 1);
  EXPECT_THROW(fit(d, Hyperparams{}), ValidationError);
}

TEST(Fit, RequiresPropensity) {
  Dataset d = noise_data(30, 1);
  d.pi_hat.reset();
  EXPECT_THROW(fit(d, Hyperparams{}), ValidationError);
}

TEST(Fit, RecoversNoiseVariance) {
  // Averaged over seeds to stay inside [0.5, 2]; per seed, the posterior mean
  // tracks the group's own sample variance (one seed draws a group with
  // sample variance 2.35 at n = 21).
  double avg0 = 0, avg1 = 0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    const Dataset d = noise_data(50, static_cast<std::uint64_t>(seed));
    const PosteriorDraws draws = fit(d, Hyperparams{});
    double s0 = 0, s1 = 0;
    for (const Draw* dr : draws.kept()) {
      const double scale = dr->scale.y_sd * dr->scale.y_sd;
      s0 += dr->scale.sigma0_sq * scale;
      s1 += dr->scale.sigma1_sq * scale;
    }
    s0 /= static_cast<double>(draws.num_kept());
    s1 /= static_cast<double>(draws.num_kept());
    double sum[2] = {0, 0}, sq[2] = {0, 0}, cnt[2] = {0, 0};
    for (std::size_t i = 0; i < d.size(); ++i) {
      sum[d.z[i]] += d.y[i];
      sq[d.z[i]] += d.y[i] * d.y[i];
      cnt[d.z[i]] += 1;
    }
    for (int g = 0; g < 2; ++g) {
      const double sample = (sq[g] - sum[g] * sum[g] / cnt[g]) / (cnt[g] - 1);
      const double post = g == 0 ? s0 : s1;
      EXPECT_GT(post / sample, 1 / 1.5) << "seed " << seed << " group " << g;
      EXPECT_LT(post / sample, 1.5) << "seed " << seed << " group " << g;
    }
    avg0 += s0 / seeds;
    avg1 += s1 / seeds;
  }
  EXPECT_GE(avg0, 0.5);
  EXPECT_LE(avg0, 2.0);
  EXPECT_GE(avg1, 0.5);
  EXPECT_LE(avg1, 2.0);
}

TEST(Fit, Deterministic) {
  const Dataset d = noise_data(120, 4);
  Hyperparams hp;
  hp.seed = 77;
  const PosteriorDraws a = fit(d, hp);
  const PosteriorDraws b = fit(d, hp);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.draws.size(), 40u);
  EXPECT_EQ(a.num_kept(), 25u);
}

namespace {

class Recorder : public FitObserver {
 public:
  int draws_this_sweep = 0;
  std::vector<int> draws_per_sweep;
  double worst = 0.0;
  int checks = 0;

  void on_parameter_draw(const ScaleState&) override { ++draws_this_sweep; }
  void on_sweep_end(int) override {
    draws_per_sweep.push_back(draws_this_sweep);
    draws_this_sweep = 0;
  }
  void on_tree_update(ForestRole, std::size_t, const Forest& mu, const Forest& tau,
                      const ResidualState& res, const ScaleState& s, const PreparedData& data) override {
    ++checks;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double m = 0, t = 0;
      const auto mrow = data.mu_features.row(i);
      const auto trow = data.tau_features.row(i);
      for (const Tree& tr : mu.trees) m += tr.predict(mrow);
      for (const Tree& tr : tau.trees) t += tr.predict(trow);
      const double b = data.z[i] ? s.b1 : s.b0;
      worst = std::max(worst, std::abs(res.total_residual()[i] - (data.y[i] - s.a * m - b * t)));
      worst = std::max(worst, std::abs(res.prognostic_residual()[i] - (data.y[i] - s.a * m)));
      worst = std::max(worst, std::abs(res.treatment_residual()[i] - (data.y[i] - b * t)));
    }
  }
};

}  // namespace

TEST(Fit, ResidualIdentitiesAndSchedule) {
  const sim::SimulatedData s = sim::generate({200, sim::Prognostic::nonlinear, sim::Treatment::heterogeneous, 5});
  Hyperparams hp;
  hp.sweeps = 6;
  hp.burnin = 2;
  hp.num_trees_mu = 7;
  hp.num_trees_tau = 4;
  Recorder rec;
  fit(s.data, hp, FitOptions{std::nullopt, &rec});
  EXPECT_EQ(rec.draws_per_sweep, std::vector<int>(6, 11));
  EXPECT_EQ(rec.checks, 66);
  EXPECT_LT(rec.worst, 1e-8);
}

TEST(Fit, HomogeneousAteAndMirrorSymmetry) {
  // Mirror: z -> 1 - z, pi -> 1 - pi, initial (b0, b1) and variances swapped.
  // Mirrored CATE = -CATE, so the two mean ATEs should cancel.
  double sum = 0, sum_mirror = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    const sim::SimulatedData s = sim::generate({500, sim::Prognostic::linear, sim::Treatment::homogeneous,
                                                static_cast<std::uint64_t>(seed)});
    Hyperparams hp;
    hp.seed = 1000 + static_cast<std::uint64_t>(seed);
    const CateSummary a = summarize(fit(s.data, hp), s.data.X);

    Dataset m = s.data;
    for (auto& z : m.z) z = 1 - z;
    for (auto& p : *m.pi_hat) p = 1.0 - p;
    ScaleState init;
    std::swap(init.b0, init.b1);
    std::swap(init.sigma0_sq, init.sigma1_sq);
    const CateSummary b = summarize(fit(m, hp, FitOptions{init, nullptr}), m.X);
    sum += a.ate_mean;
    sum_mirror += b.ate_mean;
  }
  const double mean = sum / seeds, mean_mirror = sum_mirror / seeds;
  EXPECT_GE(mean, 2.7);
  EXPECT_LE(mean, 3.3);
  EXPECT_LE(std::abs(mean + mean_mirror), 0.05) << mean << " vs " << mean_mirror;
}

TEST(Summarize, SingleDraw) {
  PosteriorDraws d;
  d.num_covariates = 1;
  Draw dr;
  dr.treatment.trees = {Tree(3.0)};
  dr.scale.b0 = 0;
  dr.scale.b1 = 1;
  d.draws = {dr};
  Matrix X(2, 1);
  const CateSummary s = summarize(d, X);
  EXPECT_EQ(s.mean, (std::vector<double>{3, 3}));
  EXPECT_EQ(s.lo, s.hi);
  EXPECT_EQ(s.ate_mean, 3);
}

TEST(Summarize, BurnInExcludedAndEmptyRejected) {
  PosteriorDraws d;
  d.num_covariates = 1;
  Draw dr;
  dr.treatment.trees = {Tree(1.0)};
  dr.burnin = true;
  d.draws = {dr};
  EXPECT_THROW(summarize(d, Matrix(1, 1)), ValidationError);
}

TEST(Summarize, SymmetricDraws) {
  Matrix m(4, 1);
  m(0, 0) = -2;
  m(1, 0) = -1;
  m(2, 0) = 1;
  m(3, 0) = 2;
  const CateSummary s = summarize_cate_draws(m, 0.95);
  EXPECT_EQ(s.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(s.lo[0], -s.hi[0]);
}

TEST(Summarize, NormalQuantiles) {
  // Stratified sample of N(3, 0.25): the k-th draw is the (k - 1/2)/1000
  // quantile, found by bisection on erfc.
  auto inv_cdf = [](double p) {
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  Matrix m(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) m(i, 0) = 3.0 + 0.5 * inv_cdf((static_cast<double>(i) + 0.5) / 1000.0);
  const CateSummary s = summarize_cate_draws(m, 0.95);
  EXPECT_NEAR(s.lo[0], 2.02, 0.05);
  EXPECT_NEAR(s.hi[0], 3.98, 0.05);
  EXPECT_NEAR(s.mean[0], 3.0, 1e-9);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
}
