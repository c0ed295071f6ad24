#include "xbcf/tree.hpp"

#include <cmath>
#include <vector>

#include "xbcf/error.hpp"

namespace xbcf {

int Tree::leaf_index(std::span<const double> x) const {
  int id = 0;
  while (!node(id).is_leaf) {
    const TreeNode& n = node(id);
    id = x[static_cast<std::size_t>(n.var)] <= n.cut ? n.left : n.right;
  }
  return id;
}

std::vector<int> Tree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf) out.push_back(static_cast<int>(i));
  }
  return out;
}

int Tree::num_leaves() const {
  int count = 0;
  for (const auto& n : nodes_) count += n.is_leaf ? 1 : 0;
  return count;
}

std::vector<int> Tree::prunable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (!n.is_leaf && node(n.left).is_leaf && node(n.right).is_leaf) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

std::vector<int> Tree::depths() const {
  std::vector<int> depth(nodes_.size(), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = node(id);
    if (n.is_leaf) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[static_cast<std::size_t>(id)] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[static_cast<std::size_t>(id)] + 1;
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
  return depth;
}

std::vector<int> Tree::parents() const {
  std::vector<int> parent(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf) continue;
    parent[static_cast<std::size_t>(nodes_[i].left)] = static_cast<int>(i);
    parent[static_cast<std::size_t>(nodes_[i].right)] = static_cast<int>(i);
  }
  return parent;
}

std::pair<int, int> Tree::split_leaf(int id, int var, double cut) {
  const int left = static_cast<int>(nodes_.size());
  const int right = left + 1;
  nodes_.push_back(TreeNode{});
  nodes_.push_back(TreeNode{});
  TreeNode& n = node(id);
  n.is_leaf = false;
  n.var = var;
  n.cut = cut;
  n.left = left;
  n.right = right;
  n.mu = 0.0;
  return {left, right};
}

void Tree::collapse(int id, double mu) {
  TreeNode& n = node(id);
  n.is_leaf = true;
  n.var = -1;
  n.cut = 0.0;
  n.left = -1;
  n.right = -1;
  n.mu = mu;
  renumber_preorder();
}

void Tree::renumber_preorder() {
  std::vector<TreeNode> out;
  out.reserve(nodes_.size());
  // Each stack entry: old id and the slot in `out` whose child pointer must be
  // patched (-1 for the root), plus which side.
  struct Pending {
    int old_id;
    int parent_slot;
    bool is_left;
  };
  std::vector<Pending> stack{{0, -1, false}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const int slot = static_cast<int>(out.size());
    out.push_back(node(p.old_id));
    if (p.parent_slot >= 0) {
      auto& parent = out[static_cast<std::size_t>(p.parent_slot)];
      (p.is_left ? parent.left : parent.right) = slot;
    }
    const TreeNode& n = node(p.old_id);
    if (!n.is_leaf) {
      stack.push_back({n.right, slot, false});
      stack.push_back({n.left, slot, true});
    }
  }
  nodes_ = std::move(out);
}

bool Tree::is_valid(std::size_t d) const {
  if (nodes_.empty()) return false;
  std::vector<int> visits(nodes_.size(), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) return false;
    if (++visits[static_cast<std::size_t>(id)] > 1) return false;
    const TreeNode& n = node(id);
    if (n.is_leaf) {
      if (!std::isfinite(n.mu)) return false;
      continue;
    }
    if (n.var < 0 || static_cast<std::size_t>(n.var) >= d || !std::isfinite(n.cut)) return false;
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
  for (int v : visits) {
    if (v != 1) return false;
  }
  return true;
}

double predict_forest(const Forest& forest, std::span<const double> x_row,
                      std::optional<double> pi, std::size_t num_covariates) {
  if (x_row.size() != num_covariates) {
    throw ValidationError("predict_forest: row has " + std::to_string(x_row.size()) +
                          " columns, expected " + std::to_string(num_covariates));
  }
  std::vector<double> extended;
  std::span<const double> features = x_row;
  if (forest.role == ForestRole::prognostic) {
    if (!pi) throw ValidationError("predict_forest: prognostic forest needs a propensity");
    extended.assign(x_row.begin(), x_row.end());
    extended.push_back(*pi);
    features = extended;
  }
  double total = 0.0;
  for (const Tree& tree : forest.trees) total += tree.predict(features);
  return total;
}

}  // namespace xbcf
