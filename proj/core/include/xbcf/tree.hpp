#pragma once

#include <optional>
#include <span>
#include <vector>

namespace xbcf {

struct TreeNode {
  bool is_leaf = true;
  int var = -1;       // split column, internal nodes only
  double cut = 0.0;   // x[var] <= cut goes left
  int left = -1;
  int right = -1;
  double mu = 0.0;    // leaf mean, leaves only

  bool operator==(const TreeNode&) const = default;
};

// Binary regression tree stored as a flat node list; node 0 is the root.
class Tree {
 public:
  Tree() : nodes_{TreeNode{}} {}
  explicit Tree(double root_mu) : nodes_{TreeNode{.mu = root_mu}} {}
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  TreeNode& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  int leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return node(leaf_index(x)).mu; }

  std::vector<int> leaves() const;
  // Internal nodes whose two children are both leaves.
  std::vector<int> prunable_nodes() const;
  std::vector<int> depths() const;
  std::vector<int> parents() const;
  int num_leaves() const;

  // Turns leaf `id` into an internal node with two fresh leaf children.
  // Returns {left, right}.
  std::pair<int, int> split_leaf(int id, int var, double cut);
  // Collapses internal node `id` (both children leaves) back into a leaf and
  // renumbers the remaining nodes in preorder.
  void collapse(int id, double mu);

  // Checks the proper-binary-tree invariants for a covariate width `d`.
  bool is_valid(std::size_t d) const;

  bool operator==(const Tree&) const = default;

 private:
  void renumber_preorder();

  std::vector<TreeNode> nodes_;
};

enum class ForestRole { prognostic, treatment };

struct Forest {
  ForestRole role = ForestRole::prognostic;
  std::vector<Tree> trees;

  bool operator==(const Forest&) const = default;
};

// Sum of leaf means reached by `x_row`. The prognostic forest additionally
// splits on the propensity score, which must then be supplied.
double predict_forest(const Forest& forest, std::span<const double> x_row,
                      std::optional<double> pi, std::size_t num_covariates);

}  // namespace xbcf
