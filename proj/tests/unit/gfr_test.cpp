#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xbcf/conjugate.hpp"
#include "xbcf/gfr.hpp"
#include "xbcf/rng.hpp"

using namespace xbcf;

namespace {

Matrix column_matrix(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

std::vector<int> all_rows(std::size_t n) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

struct Problem {
  Matrix X;
  std::vector<double> residual;
  std::vector<int> z;
};

Problem random_problem(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Problem p{Matrix(n, d), std::vector<double>(n), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) p.X(i, j) = rng.normal();
    p.z[i] = rng.bernoulli(0.5) ? 1 : 0;
    p.residual[i] = (p.X(i, 0) > 0 ? 1.0 : -1.0) + 0.5 * rng.normal();
  }
  return p;
}

const LeafModel kLeaf{{1.0, 1.0}, {1.0, 1.0}, 0.5};

}  // namespace

TEST(Cutpoints, AllMidpoints) {
  const std::vector<double> v{1, 2, 3};
  const auto c = cutpoints_from_sorted(v, 100);
  EXPECT_EQ(c.values, (std::vector<double>{1.5, 2.5}));
  EXPECT_EQ(c.positions, (std::vector<int>{1, 2}));
}

TEST(Cutpoints, ConstantVariableHasNone) {
  const std::vector<double> v{5, 5, 5};
  EXPECT_TRUE(cutpoints_from_sorted(v, 100).values.empty());
  const FeatureMatrix X(column_matrix(v));
  const auto rows = all_rows(3);
  EXPECT_EQ(build_cutpoints(X, rows, 100).total(), 0u);
}

TEST(Cutpoints, DuplicatesCollapse) {
  const std::vector<double> v{1, 1, 2, 2, 2, 4};
  const auto c = cutpoints_from_sorted(v, 100);
  EXPECT_EQ(c.values, (std::vector<double>{1.5, 3.0}));
  EXPECT_EQ(c.positions, (std::vector<int>{2, 5}));
}

TEST(Cutpoints, ThinnedToMaximum) {
  Rng rng(4);
  std::vector<double> v(1000);
  for (double& x : v) x = rng.normal();
  std::sort(v.begin(), v.end());
  const auto c = cutpoints_from_sorted(v, 100);
  ASSERT_EQ(c.values.size(), 100u);
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    if (k > 0) EXPECT_LT(c.values[k - 1], c.values[k]);
    // Direct scan: the candidate sits strictly between two neighbouring
    // order statistics and the stored position counts the rows at or below.
    const int below = static_cast<int>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= c.values[k]; }));
    EXPECT_EQ(below, c.positions[k]);
    ASSERT_GT(below, 0);
    ASSERT_LT(below, 1000);
    EXPECT_GT(c.values[k], v[below - 1]);
    EXPECT_LT(c.values[k], v[below]);
  }
}

TEST(Cutpoints, PresortedAndDirectAgree) {
  const Problem p = random_problem(300, 3, 8);
  const FeatureMatrix X(p.X);
  std::vector<int> big, small;
  for (int i = 0; i < 300; ++i) {
    if (i % 3) big.push_back(i);
    if (i % 17 == 0) small.push_back(i);
  }
  for (const auto& rows : {big, small}) {
    const CutpointGrid grid = build_cutpoints(X, rows, 40);
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> vals;
      for (int i : rows) vals.push_back(p.X(static_cast<std::size_t>(i), j));
      std::sort(vals.begin(), vals.end());
      const auto want = cutpoints_from_sorted(vals, 40);
      EXPECT_EQ(grid.vars[j].values, want.values);
      EXPECT_EQ(grid.vars[j].positions, want.positions);
    }
  }
}

TEST(PriorFactor, Values) {
  EXPECT_NEAR(no_split_prior_factor(0.95, 1.25, 0, 100), 100 * (1 / 0.95 - 1), 1e-12);
  EXPECT_NEAR(no_split_prior_factor(0.95, 1.25, 0, 100), 5.2632, 1e-4);
  EXPECT_NEAR(no_split_prior_factor(0.95, 1.25, 1, 100), 150.36, 5e-3);
}

TEST(PriorFactor, IncreasingInDepth) {
  for (double beta : {0.5, 1.25, 2.0}) {
    for (int d = 0; d < 30; ++d) {
      EXPECT_LT(no_split_prior_factor(0.95, beta, d, 10), no_split_prior_factor(0.95, beta, d + 1, 10));
    }
  }
}

TEST(Categorical, EqualWeightsSplitEvenly) {
  Rng rng(17);
  const std::vector<double> w{1.0, 1.0, 0.0};
  int first = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = rng.categorical(w);
    ASSERT_NE(k, 2u);
    first += k == 0;
  }
  EXPECT_NEAR(first / 10000.0, 0.5, 0.02);
}

TEST(NormalizeLogWeights, ShiftInvariant) {
  Rng rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(20);
    for (double& x : a) x = 30 * rng.normal();
    std::vector<double> b = a;
    const double shift = 1e4 * rng.normal();
    for (double& x : b) x += shift;
    normalize_log_weights(a);
    normalize_log_weights(b);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(SplitWeights, SymmetricResidualsGiveEqualCandidates) {
  // Three binary variables, each cutting the node 3 / 3, with residuals that
  // are the same multiset on both sides and symmetric around 0.
  const std::vector<double> r{-1, 0, 1, -1, 0, 1};
  Matrix Xm(6, 3);
  const int layout[3][6] = {{0, 0, 0, 1, 1, 1}, {0, 1, 0, 1, 0, 1}, {1, 0, 0, 0, 1, 1}};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 6; ++i) Xm(i, j) = layout[j][i];
  const FeatureMatrix X(Xm);
  const auto rows = all_rows(6);
  const CutpointGrid grid = build_cutpoints(X, rows, 100);
  ASSERT_EQ(grid.total(), 3u);
  std::vector<GroupedSuffStats> left;
  GroupedSuffStats node;
  for (std::size_t i = 0; i < 6; ++i) node.add(0, r[i]);
  for (std::size_t j = 0; j < 3; ++j) {
    GroupedSuffStats s;
    for (std::size_t i = 0; i < 6; ++i)
      if (Xm(i, j) <= grid.vars[j].values[0]) s.add(0, r[i]);
    left.push_back(s);
  }
  const SplitWeights w = split_weights(grid, left, node, kLeaf, 0, 0.95, 1.25);
  ASSERT_EQ(w.candidate.size(), 3u);
  for (double p : w.candidate) EXPECT_NEAR(p, w.candidate[0], 1e-15);
  EXPECT_NEAR(std::accumulate(w.candidate.begin(), w.candidate.end(), w.no_split), 1.0, 1e-12);
}

TEST(SplitWeights, MirrorCandidatesAgree) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const FeatureMatrix X(column_matrix(x));
  const auto rows = all_rows(6);
  const CutpointGrid grid = build_cutpoints(X, rows, 100);
  std::vector<GroupedSuffStats> left;
  for (int pos : grid.vars[0].positions) left.push_back({static_cast<double>(pos), 0, 0, 0});
  const SplitWeights w = split_weights(grid, left, {6, 0, 0, 0}, kLeaf, 0, 0.95, 1.25);
  ASSERT_EQ(w.candidate.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(w.candidate[k], w.candidate[4 - k], 1e-15);
}

TEST(SplitWeights, EmptyGridMeansNoSplit) {
  const SplitWeights w = split_weights(CutpointGrid{}, {}, {3, 0, 1, 0}, kLeaf, 0, 0.95, 1.25);
  EXPECT_TRUE(w.candidate.empty());
  EXPECT_EQ(w.no_split, 1.0);
}

TEST(SplitWeights, MatchesDirectFormula) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> r{-1.0, -0.5, 0.8, 1.2};
  const FeatureMatrix X(column_matrix(x));
  const auto rows = all_rows(4);
  const CutpointGrid grid = build_cutpoints(X, rows, 100);
  std::vector<GroupedSuffStats> left;
  GroupedSuffStats node;
  for (double v : r) node.add(0, v);
  for (int pos : grid.vars[0].positions) {
    GroupedSuffStats s;
    for (int i = 0; i < pos; ++i) s.add(0, r[static_cast<std::size_t>(i)]);
    left.push_back(s);
  }
  const SplitWeights w = split_weights(grid, left, node, kLeaf, 1, 0.95, 1.25);
  std::vector<double> raw;
  for (const auto& l : left) {
    raw.push_back(std::exp(leaf_log_marginal(l, kLeaf.coeffs, kLeaf.variances, kLeaf.nu) +
                           leaf_log_marginal(node - l, kLeaf.coeffs, kLeaf.variances, kLeaf.nu)));
  }
  const double stop = 3 * (std::pow(2.0, 1.25) / 0.95 - 1) *
                      std::exp(leaf_log_marginal(node, kLeaf.coeffs, kLeaf.variances, kLeaf.nu));
  const double total = std::accumulate(raw.begin(), raw.end(), stop);
  for (std::size_t k = 0; k < raw.size(); ++k) EXPECT_NEAR(w.candidate[k], raw[k] / total, 1e-12);
  EXPECT_NEAR(w.no_split, stop / total, 1e-12);
}

TEST(GrowFromRoot, SmallNodeIsLeaf) {
  const Problem p = random_problem(4, 2, 1);
  const FeatureMatrix X(p.X);
  GrowOptions opts;
  opts.min_node_size = 5;
  Rng rng(1);
  const Tree t = grow_from_root(p.residual, X, p.z, kLeaf, opts, rng);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_TRUE(std::isfinite(t.node(0).mu));
}

TEST(GrowFromRoot, ZeroDepthIsLeaf) {
  const Problem p = random_problem(200, 2, 1);
  const FeatureMatrix X(p.X);
  GrowOptions opts;
  opts.max_depth = 0;
  Rng rng(1);
  EXPECT_EQ(grow_from_root(p.residual, X, p.z, kLeaf, opts, rng).size(), 1u);
}

TEST(GrowFromRoot, ConstantCovariatesGiveLeaf) {
  Problem p = random_problem(50, 2, 3);
  for (std::size_t i = 0; i < 50; ++i) p.X(i, 0) = p.X(i, 1) = 1.0;
  const FeatureMatrix X(p.X);
  Rng rng(3);
  EXPECT_EQ(grow_from_root(p.residual, X, p.z, kLeaf, GrowOptions{}, rng).size(), 1u);
}

TEST(GrowFromRoot, Deterministic) {
  const Problem p = random_problem(300, 3, 5);
  const FeatureMatrix X(p.X);
  Rng a(99), b(99);
  std::vector<double> fa(300), fb(300);
  const Tree ta = grow_from_root(p.residual, X, p.z, kLeaf, GrowOptions{}, a, fa);
  const Tree tb = grow_from_root(p.residual, X, p.z, kLeaf, GrowOptions{}, b, fb);
  EXPECT_EQ(ta, tb);
  EXPECT_EQ(fa, fb);
  EXPECT_GT(ta.size(), 1u);  // the step in x1 is strong
}

TEST(GrowFromRoot, ValidTreesWithNonEmptyLeaves) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Problem p = random_problem(150, 3, seed);
    const FeatureMatrix X(p.X);
    Rng rng(seed);
    std::vector<double> fitted(150);
    GrowOptions opts;
    opts.min_node_size = 3;
    const Tree t = grow_from_root(p.residual, X, p.z, kLeaf, opts, rng, fitted);
    ASSERT_TRUE(t.is_valid(3));
    std::vector<int> count(t.size(), 0);
    for (std::size_t i = 0; i < 150; ++i) {
      const auto row = X.row(i);
      const int leaf = t.leaf_index(row);
      ++count[static_cast<std::size_t>(leaf)];
      EXPECT_EQ(fitted[i], t.node(leaf).mu);
    }
    for (int leaf : t.leaves()) EXPECT_GT(count[static_cast<std::size_t>(leaf)], 0);
  }
}
