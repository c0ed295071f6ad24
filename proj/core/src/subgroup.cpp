#include "xbcf/subgroup.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "xbcf/error.hpp"
#include "xbcf/xbcf.hpp"

namespace xbcf {

CartSplit best_cart_split(std::span<const double> target, const Matrix& X,
                          std::span<const int> rows, int min_leaf) {
  CartSplit best;
  const std::size_t m = rows.size();
  const auto min_side = static_cast<std::size_t>(std::max(min_leaf, 1));
  if (m < 2 * min_side) return best;

  double total = 0.0, total_sq = 0.0;
  for (int i : rows) {
    total += target[static_cast<std::size_t>(i)];
    total_sq += target[static_cast<std::size_t>(i)] * target[static_cast<std::size_t>(i)];
  }
  const double base = total * total / static_cast<double>(m);
  const double threshold = 1e-10 * (1.0 + total_sq);

  std::vector<int> order(rows.begin(), rows.end());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return X(static_cast<std::size_t>(a), j) < X(static_cast<std::size_t>(b), j);
    });
    double left = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      left += target[static_cast<std::size_t>(order[k])];
      const std::size_t n_left = k + 1;
      const std::size_t n_right = m - n_left;
      const double lo = X(static_cast<std::size_t>(order[k]), j);
      const double hi = X(static_cast<std::size_t>(order[k + 1]), j);
      if (!(lo < hi) || n_left < min_side || n_right < min_side) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(n_left) +
                          right * right / static_cast<double>(n_right) - base;
      if (gain > threshold && gain > best.gain) {
        double cut = lo + 0.5 * (hi - lo);
        if (!(cut < hi)) cut = lo;
        best = {static_cast<int>(j), cut, gain};
      }
    }
  }
  return best;
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string column_name(const std::vector<std::string>& names, int var) {
  if (var >= 0 && static_cast<std::size_t>(var) < names.size()) return names[static_cast<std::size_t>(var)];
  return "x" + std::to_string(var + 1);
}

struct CartBuilder {
  std::span<const double> target;
  const Matrix& X;
  int max_depth;
  int min_leaf;
  const std::vector<std::string>& names;
  Tree tree;
  std::vector<std::vector<int>> rows_of_leaf;
  std::vector<std::string> rule_of_leaf;

  void grow(int node, std::vector<int> rows, int depth, const std::string& rule) {
    const CartSplit split = depth < max_depth ? best_cart_split(target, X, rows, min_leaf) : CartSplit{};
    if (split.var < 0) {
      double sum = 0.0;
      for (int i : rows) sum += target[static_cast<std::size_t>(i)];
      tree.node(node).mu = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
      if (rows_of_leaf.size() <= static_cast<std::size_t>(node)) {
        rows_of_leaf.resize(static_cast<std::size_t>(node) + 1);
        rule_of_leaf.resize(static_cast<std::size_t>(node) + 1);
      }
      rows_of_leaf[static_cast<std::size_t>(node)] = std::move(rows);
      rule_of_leaf[static_cast<std::size_t>(node)] = rule.empty() ? "all units" : rule;
      return;
    }
    std::vector<int> left, right;
    for (int i : rows) {
      (X(static_cast<std::size_t>(i), static_cast<std::size_t>(split.var)) <= split.cut ? left : right)
          .push_back(i);
    }
    const auto [l, r] = tree.split_leaf(node, split.var, split.cut);
    const std::string name = column_name(names, split.var);
    const std::string prefix = rule.empty() ? "" : rule + " & ";
    grow(l, std::move(left), depth + 1, prefix + name + " <= " + format_value(split.cut));
    grow(r, std::move(right), depth + 1, prefix + name + " > " + format_value(split.cut));
  }
};

}  // namespace

SubgroupTree subgroup_tree(std::span<const double> cate, const Matrix& X, int max_depth,
                           int min_leaf, const std::vector<std::string>& names) {
  if (cate.size() != X.rows()) {
    throw ValidationError("subgroup_tree: " + std::to_string(cate.size()) + " CATE values for " +
                          std::to_string(X.rows()) + " rows");
  }
  if (cate.empty()) throw ValidationError("subgroup_tree: no units");
  std::vector<int> rows(cate.size());
  std::iota(rows.begin(), rows.end(), 0);
  CartBuilder builder{cate, X, std::max(max_depth, 0), std::max(min_leaf, 1), names, Tree(0.0), {}, {}};
  builder.grow(0, std::move(rows), 0, "");

  SubgroupTree out;
  out.tree = builder.tree;
  out.assignment.assign(cate.size(), 0);
  // Preorder numbering of leaves.
  std::vector<int> stack{0};
  int next_id = 1;
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    const TreeNode& n = out.tree.node(node);
    if (!n.is_leaf) {
      stack.push_back(n.right);
      stack.push_back(n.left);
      continue;
    }
    Subgroup g;
    g.node = node;
    g.id = next_id++;
    const auto& members = builder.rows_of_leaf[static_cast<std::size_t>(node)];
    g.count = members.size();
    g.mean_cate = n.mu;
    g.share = static_cast<double>(members.size()) / static_cast<double>(cate.size());
    g.rule = builder.rule_of_leaf[static_cast<std::size_t>(node)];
    for (int i : members) out.assignment[static_cast<std::size_t>(i)] = g.id;
    out.subgroups.push_back(g);
  }
  return out;
}

std::string SubgroupTree::describe() const {
  std::ostringstream out;
  for (const Subgroup& g : subgroups) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "subgroup %d: mean CATE %.4f, %.1f%% of units (n=%zu): ", g.id,
                  g.mean_cate, 100.0 * g.share, g.count);
    out << buf << g.rule << '\n';
  }
  return out.str();
}

SubgroupDifference subgroup_posterior(const Matrix& cate_draws, std::span<const int> assignment,
                                      int group_a, int group_b, double level) {
  if (assignment.size() != cate_draws.cols()) {
    throw ValidationError("subgroup_posterior: assignment length does not match draws");
  }
  if (cate_draws.rows() == 0) throw ValidationError("subgroup_posterior: no draws");
  std::vector<int> members_a, members_b;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == group_a) members_a.push_back(static_cast<int>(i));
    if (assignment[i] == group_b) members_b.push_back(static_cast<int>(i));
  }
  if (members_a.empty() || members_b.empty()) {
    throw ValidationError("subgroup_posterior: subgroup " +
                          std::to_string(members_a.empty() ? group_a : group_b) + " is empty");
  }
  SubgroupDifference out;
  out.draws.resize(cate_draws.rows());
  for (std::size_t s = 0; s < cate_draws.rows(); ++s) {
    double sa = 0.0, sb = 0.0;
    for (int i : members_a) sa += cate_draws(s, static_cast<std::size_t>(i));
    for (int i : members_b) sb += cate_draws(s, static_cast<std::size_t>(i));
    out.draws[s] = sa / static_cast<double>(members_a.size()) - sb / static_cast<double>(members_b.size());
  }
  out.mean = std::accumulate(out.draws.begin(), out.draws.end(), 0.0) / static_cast<double>(out.draws.size());
  out.lo = quantile(out.draws, (1.0 - level) / 2.0);
  out.hi = quantile(out.draws, 1.0 - (1.0 - level) / 2.0);
  return out;
}

SubgroupDifference subgroup_posterior(const PosteriorDraws& draws, const Matrix& X,
                                      std::span<const int> assignment, int group_a, int group_b,
                                      double level) {
  return subgroup_posterior(cate_draws(draws, X), assignment, group_a, group_b, level);
}

}  // namespace xbcf
