#pragma once

#include <optional>
#include <span>
#include <vector>

#include "xbcf/matrix.hpp"
#include "xbcf/rng.hpp"
#include "xbcf/tree.hpp"
#include "xbcf/types.hpp"

namespace xbcf {

// Column-major view of the split variables for one forest, with each column's
// row order presorted once so tree growth never re-sorts.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  // `extra` (e.g. the propensity score) is appended as the last column.
  explicit FeatureMatrix(const Matrix& X, std::optional<std::span<const double>> extra = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
  std::span<const double> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::vector<double> row(std::size_t i) const;
  const std::vector<std::vector<int>>& sorted_rows() const { return sorted_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<std::vector<int>> sorted_;
};

// Candidate cutpoints of one variable within a node. `positions[k]` is the
// number of node rows, in ascending order of the variable, that fall at or
// below `values[k]`.
struct VariableCutpoints {
  std::vector<double> values;
  std::vector<int> positions;
};

struct CutpointGrid {
  std::vector<VariableCutpoints> vars;

  std::size_t total() const;
};

// Candidates for a variable whose node values are given in ascending order:
// midpoints between distinct neighbours, thinned to at most `max_cutpoints`
// evenly spaced order statistics.
VariableCutpoints cutpoints_from_sorted(std::span<const double> sorted_values, int max_cutpoints);

CutpointGrid build_cutpoints(const FeatureMatrix& X, std::span<const int> rows, int max_cutpoints);

// Normalized split probabilities; `candidate` is flattened in grid order
// (variable-major).
struct SplitWeights {
  std::vector<double> candidate;
  double no_split = 1.0;
};

// Converts log-weights to probabilities in place (max-subtraction first).
void normalize_log_weights(std::span<double> log_weights);

// |C| ((1 + depth)^beta / alpha - 1): prior odds multiplier of stopping.
double no_split_prior_factor(double alpha, double beta, int depth, std::size_t num_candidates);

struct LeafModel {
  GroupCoeffs coeffs;
  GroupVariances variances;
  double nu = 1.0;
};

struct GrowOptions {
  double alpha = 0.95;
  double beta = 1.25;
  int max_depth = 20;
  int min_node_size = 5;
  int max_cutpoints = 100;

  static GrowOptions from(const Hyperparams& hp) {
    return {hp.alpha, hp.beta, hp.max_depth, hp.min_node_size, hp.max_cutpoints};
  }
};

SplitWeights split_weights(const CutpointGrid& grid, std::span<const GroupedSuffStats> left_stats,
                           const GroupedSuffStats& node_stats, const LeafModel& leaf, int depth,
                           double alpha, double beta);

// Grows one tree from the root against `residual`, sampling a cutpoint or a
// stop at every node and drawing each leaf mean from its conjugate posterior.
// When `fitted` is non-empty it receives every row's leaf mean.
Tree grow_from_root(std::span<const double> residual, const FeatureMatrix& X,
                    std::span<const int> z, const LeafModel& leaf, const GrowOptions& opts,
                    Rng& rng, std::span<double> fitted = {});

}  // namespace xbcf
