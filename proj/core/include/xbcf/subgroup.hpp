#pragma once

#include <span>
#include <string>
#include <vector>

#include "xbcf/draws.hpp"
#include "xbcf/matrix.hpp"
#include "xbcf/tree.hpp"

namespace xbcf {

struct CartSplit {
  int var = -1;
  double cut = 0.0;
  double gain = 0.0;  // reduction in the sum of squared errors
};

// Best variance-reduction split of `rows` over all (variable, midpoint) pairs
// leaving at least `min_leaf` rows on each side. var == -1 when none helps.
CartSplit best_cart_split(std::span<const double> target, const Matrix& X,
                          std::span<const int> rows, int min_leaf);

struct Subgroup {
  int node = 0;        // leaf id in the tree
  int id = 0;          // 1-based, in tree preorder
  std::size_t count = 0;
  double mean_cate = 0.0;
  double share = 0.0;  // fraction of all units
  std::string rule;    // conjunction of the splits on the path
};

struct SubgroupTree {
  Tree tree;  // leaf mu = subgroup mean CATE
  std::vector<int> assignment;  // subgroup id per unit
  std::vector<Subgroup> subgroups;

  std::string describe() const;
};

// Greedy CART regression tree fit to CATE point estimates.
SubgroupTree subgroup_tree(std::span<const double> cate, const Matrix& X, int max_depth,
                           int min_leaf, const std::vector<std::string>& names = {});

struct SubgroupDifference {
  std::vector<double> draws;  // per posterior draw: mean CATE in a minus in b
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// `cate_draws` has one row per posterior draw and one column per unit.
SubgroupDifference subgroup_posterior(const Matrix& cate_draws, std::span<const int> assignment,
                                      int group_a, int group_b, double level = 0.95);
SubgroupDifference subgroup_posterior(const PosteriorDraws& draws, const Matrix& X,
                                      std::span<const int> assignment, int group_a, int group_b,
                                      double level = 0.95);

}  // namespace xbcf
