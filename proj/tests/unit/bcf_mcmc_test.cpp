#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "xbcf/bcf_mcmc.hpp"
#include "xbcf/conjugate.hpp"
#include "xbcf/error.hpp"
#include "xbcf/simulation.hpp"

using namespace xbcf;

namespace {

const LeafModel kLeaf{{1.0, 1.0}, {1.0, 1.0}, 1.0};

struct Step {
  Matrix X;
  std::vector<double> r;
  std::vector<int> z;
};

Step step_data(std::size_t n, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Step s{Matrix(n, 1), std::vector<double>(n), std::vector<int>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    s.X(i, 0) = rng.uniform();
    s.r[i] = (s.X(i, 0) > 0.5 ? 1.0 : -1.0) + noise * rng.normal();
  }
  return s;
}

sim::SimulatedData small_sim(std::size_t n, std::uint64_t seed) {
  return sim::generate({n, sim::Prognostic::linear, sim::Treatment::homogeneous, seed});
}

}  // namespace

TEST(MhStep, PruneOnRootIsRejected) {
  const Step s = step_data(50, 0.5, 1);
  const FeatureMatrix X(s.X);
  int prunes = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const MhStepResult res = mh_step(Tree(0.0), s.r, s.z, X, kLeaf, GrowOptions{}, rng);
    if (res.move != TreeMove::prune) continue;
    ++prunes;
    EXPECT_FALSE(res.accepted);
    EXPECT_EQ(res.acceptance, 0.0);
    EXPECT_EQ(res.tree.size(), 1u);
  }
  EXPECT_GT(prunes, 0);
}

TEST(MhStep, AcceptanceIsAProbability) {
  const Step s = step_data(120, 1.0, 2);
  const FeatureMatrix X(s.X);
  Rng rng(3);
  Tree t;
  std::vector<double> fitted(120);
  for (int i = 0; i < 500; ++i) {
    MhStepResult res = mh_step(std::move(t), s.r, s.z, X, kLeaf, GrowOptions{}, rng, fitted);
    ASSERT_GE(res.acceptance, 0.0);
    ASSERT_LE(res.acceptance, 1.0);
    t = std::move(res.tree);
    ASSERT_TRUE(t.is_valid(1));
    for (std::size_t k = 0; k < 120; ++k) ASSERT_EQ(fitted[k], t.predict(X.row(k)));
  }
}

TEST(MhStep, FindsObviousStep) {
  // A split within 0.05 of the step appears somewhere in the tree after 200
  // steps. (The root split itself is usually not there: once a wrong root is
  // accepted, GROW/PRUNE can only remove it after pruning everything below.)
  int hits = 0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    const Step s = step_data(200, 0.5, 100 + static_cast<std::uint64_t>(run));
    const FeatureMatrix X(s.X);
    const LeafModel leaf{{1, 1}, {0.25, 0.25}, 1.0};
    Rng rng(static_cast<std::uint64_t>(run));
    Tree t;
    for (int i = 0; i < 200; ++i) t = mh_step(std::move(t), s.r, s.z, X, leaf, GrowOptions{}, rng).tree;
    bool found = false;
    for (const TreeNode& node : t.nodes()) found |= !node.is_leaf && std::abs(node.cut - 0.5) <= 0.05;
    hits += found;
  }
  EXPECT_GE(hits, 90);
}

TEST(MhStep, TwoStateChainMatchesPosterior) {
  // One variable with two distinct values and max_depth 1: the tree is
  // either the root or the single split.
  const std::size_t n = 12;
  Matrix Xm(n, 1);
  std::vector<double> r(n);
  std::vector<int> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    Xm(i, 0) = i < n / 2 ? 0.0 : 1.0;
    r[i] = (i < n / 2 ? -0.15 : 0.15) + (i % 3 == 0 ? 0.1 : -0.05);
    z[i] = static_cast<int>(i % 2);
  }
  const FeatureMatrix X(Xm);
  const LeafModel leaf{{1.0, 0.8}, {1.0, 1.5}, 0.7};
  const GrowOptions prior{0.5, 1.25, 1, 5, 100};

  GroupedSuffStats left, right;
  for (std::size_t i = 0; i < n; ++i) (i < n / 2 ? left : right).add(z[i], r[i]);
  const double p0 = 0.5;
  const double log_odds = std::log(p0) - std::log1p(-p0) +
                          leaf_log_marginal(left, leaf.coeffs, leaf.variances, leaf.nu) +
                          leaf_log_marginal(right, leaf.coeffs, leaf.variances, leaf.nu) -
                          leaf_log_marginal(left + right, leaf.coeffs, leaf.variances, leaf.nu);
  const double p_split = 1.0 / (1.0 + std::exp(-log_odds));
  ASSERT_GT(p_split, 0.1);
  ASSERT_LT(p_split, 0.9);

  Rng rng(2024);
  Tree t;
  long split_steps = 0;
  const long steps = 100000;
  for (long s = 0; s < steps; ++s) {
    t = mh_step(std::move(t), r, z, X, leaf, prior, rng).tree;
    split_steps += t.size() == 3;
  }
  const double f = static_cast<double>(split_steps) / steps;
  EXPECT_LE(oracle::total_variation({1 - f, f}, {1 - p_split, p_split}), 0.02) << f << " vs " << p_split;
}

TEST(BcfFit, ZeroIterationsReturnsInit) {
  const auto s = small_sim(120, 1);
  Hyperparams hp;
  hp.sweeps = 4;
  hp.burnin = 1;
  hp.num_trees_mu = 5;
  hp.num_trees_tau = 3;
  const PosteriorDraws x = fit(s.data, hp);
  Draw init = x.draws.back();
  Rng rng(1);
  const PosteriorDraws out = bcf_fit(s.data, hp, McmcSchedule{0, 0}, init, rng);
  ASSERT_EQ(out.draws.size(), 1u);
  EXPECT_TRUE(out.draws[0] == init);
}

TEST(BcfFit, ShapeMismatchRejected) {
  const auto s = small_sim(60, 1);
  Hyperparams hp;
  hp.num_trees_mu = 3;
  hp.num_trees_tau = 2;
  Draw init;
  init.prognostic.trees = {Tree(), Tree()};
  init.treatment.trees = {Tree(), Tree()};
  Rng rng(1);
  EXPECT_THROW(bcf_fit(s.data, hp, McmcSchedule{1, 1}, init, rng), ValidationError);
}

TEST(BcfFit, ColdStartRecoversHomogeneousEffect) {
  const auto s = small_sim(500, 11);
  Rng rng(5);
  const PosteriorDraws d = bcf_fit(s.data, Hyperparams{}, McmcSchedule{1000, 1000}, std::nullopt, rng);
  EXPECT_EQ(d.num_kept(), 1000u);
  EXPECT_NEAR(summarize(d, s.data.X).ate_mean, 3.0, 0.4);
}

TEST(WarmStart, ChainCountsAndIdentity) {
  const auto s = small_sim(150, 2);
  Hyperparams hp;
  hp.num_trees_mu = 6;
  hp.num_trees_tau = 3;
  const PosteriorDraws x = fit(s.data, hp);
  ASSERT_EQ(x.num_kept(), 25u);

  const PosteriorDraws zero = warm_start(s.data, x, WarmStartOptions{0, 1, 1, 0});
  ASSERT_EQ(zero.draws.size(), 25u);
  const auto kept = x.kept();
  for (std::size_t c = 0; c < 25; ++c) {
    EXPECT_TRUE(zero.draws[c].prognostic == kept[c]->prognostic);
    EXPECT_TRUE(zero.draws[c].treatment == kept[c]->treatment);
    EXPECT_TRUE(zero.draws[c].scale == kept[c]->scale);
    EXPECT_EQ(zero.draws[c].chain, static_cast<int>(c));
  }

  const PosteriorDraws pooled = warm_start(s.data, x, WarmStartOptions{7, 1, 2, 0});
  EXPECT_EQ(pooled.draws.size(), 25u * 7u);
  EXPECT_EQ(pooled.num_chains(), 25);
  EXPECT_EQ(pooled.num_kept(), 175u);
  for (std::size_t k = 0; k < pooled.draws.size(); ++k) EXPECT_EQ(pooled.draws[k].chain, static_cast<int>(k / 7));

  // Thread count does not change the result.
  EXPECT_TRUE(pooled == warm_start(s.data, x, WarmStartOptions{7, 1, 1, 0}));
}

TEST(WarmStart, EmptyPostBurnInRejected) {
  PosteriorDraws x;
  Draw d;
  d.burnin = true;
  x.draws = {d};
  const auto s = small_sim(50, 1);
  EXPECT_THROW(warm_start(s.data, x, WarmStartOptions{}), ValidationError);
}

TEST(WarmStart, ChainsAreUncorrelated) {
  const auto s = small_sim(200, 4);
  const PosteriorDraws x = fit(s.data, Hyperparams{});
  const int iters = 100;
  const PosteriorDraws pooled = warm_start(s.data, x, WarmStartOptions{iters, 9, 1, 0});
  const Matrix cate = cate_draws(pooled, s.data.X);
  std::vector<std::vector<double>> ate(25, std::vector<double>(iters));
  for (std::size_t k = 0; k < cate.rows(); ++k) {
    const auto row = cate.row(k);
    ate[k / iters][k % iters] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  }
  double sum = 0;
  int pairs = 0;
  for (int a = 0; a < 25; ++a) {
    for (int b = a + 1; b < 25; ++b) {
      sum += oracle::correlation(ate[a], ate[b]);
      ++pairs;
    }
  }
  EXPECT_LT(std::abs(sum / pairs), 0.3);
}

TEST(WarmStart, WiderIntervalsThanXbcf) {
  const auto s = small_sim(500, 6);
  const PosteriorDraws x = fit(s.data, Hyperparams{});
  const PosteriorDraws ws = warm_start(s.data, x, WarmStartOptions{});
  auto mean_length = [](const CateSummary& c) {
    double t = 0;
    for (std::size_t i = 0; i < c.lo.size(); ++i) t += c.hi[i] - c.lo[i];
    return t / static_cast<double>(c.lo.size());
  };
  EXPECT_GE(mean_length(summarize(ws, s.data.X)), mean_length(summarize(x, s.data.X)));
}
