#include "xbcf/gfr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xbcf/conjugate.hpp"
#include "xbcf/error.hpp"

namespace xbcf {

FeatureMatrix::FeatureMatrix(const Matrix& X, std::optional<std::span<const double>> extra)
    : rows_(X.rows()), cols_(X.cols() + (extra ? 1 : 0)) {
  if (extra && extra->size() != rows_) {
    throw ValidationError("FeatureMatrix: extra column length does not match rows");
  }
  data_.resize(rows_ * cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) data_[j * rows_ + i] = X(i, j);
  }
  if (extra) std::copy(extra->begin(), extra->end(), data_.begin() + X.cols() * rows_);

  sorted_.resize(cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    auto& order = sorted_[j];
    order.resize(rows_);
    std::iota(order.begin(), order.end(), 0);
    const auto col = column(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return col[static_cast<std::size_t>(a)] < col[static_cast<std::size_t>(b)]; });
  }
}

std::vector<double> FeatureMatrix::row(std::size_t i) const {
  std::vector<double> out(cols_);
  for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
  return out;
}

std::size_t CutpointGrid::total() const {
  std::size_t count = 0;
  for (const auto& v : vars) count += v.values.size();
  return count;
}

VariableCutpoints cutpoints_from_sorted(std::span<const double> sorted_values, int max_cutpoints) {
  VariableCutpoints out;
  std::vector<int> boundaries;
  for (std::size_t p = 1; p < sorted_values.size(); ++p) {
    if (sorted_values[p - 1] < sorted_values[p]) boundaries.push_back(static_cast<int>(p));
  }
  const std::size_t available = boundaries.size();
  const std::size_t wanted = std::min<std::size_t>(available, static_cast<std::size_t>(std::max(max_cutpoints, 0)));
  out.values.reserve(wanted);
  out.positions.reserve(wanted);
  for (std::size_t k = 0; k < wanted; ++k) {
    // Evenly spaced picks; distinct because available >= wanted.
    const std::size_t pick = wanted == available ? k : (k * available + available / 2) / wanted;
    const int p = boundaries[std::min(pick, available - 1)];
    const double lo = sorted_values[static_cast<std::size_t>(p) - 1];
    const double hi = sorted_values[static_cast<std::size_t>(p)];
    double mid = lo + 0.5 * (hi - lo);
    if (!(mid < hi)) mid = lo;
    out.values.push_back(mid);
    out.positions.push_back(p);
  }
  return out;
}

CutpointGrid build_cutpoints(const FeatureMatrix& X, std::span<const int> rows, int max_cutpoints) {
  CutpointGrid grid;
  grid.vars.resize(X.cols());
  std::vector<double> values;
  values.reserve(rows.size());
  // Small nodes sort directly; large ones filter the presorted orders.
  if (rows.size() * 8 < X.rows() || X.sorted_rows().size() != X.cols()) {
    values.resize(rows.size());
    for (std::size_t j = 0; j < X.cols(); ++j) {
      for (std::size_t k = 0; k < rows.size(); ++k) values[k] = X(static_cast<std::size_t>(rows[k]), j);
      std::sort(values.begin(), values.end());
      grid.vars[j] = cutpoints_from_sorted(values, max_cutpoints);
    }
    return grid;
  }
  std::vector<char> member(X.rows(), 0);
  for (int i : rows) member[static_cast<std::size_t>(i)] = 1;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    values.clear();
    for (int i : X.sorted_rows()[j]) {
      if (member[static_cast<std::size_t>(i)]) values.push_back(X(static_cast<std::size_t>(i), j));
    }
    grid.vars[j] = cutpoints_from_sorted(values, max_cutpoints);
  }
  return grid;
}

void normalize_log_weights(std::span<double> log_weights) {
  if (log_weights.empty()) return;
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (double& w : log_weights) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : log_weights) w /= total;
}

double no_split_prior_factor(double alpha, double beta, int depth, std::size_t num_candidates) {
  return static_cast<double>(num_candidates) * (std::pow(1.0 + depth, beta) / alpha - 1.0);
}

SplitWeights split_weights(const CutpointGrid& grid, std::span<const GroupedSuffStats> left_stats,
                           const GroupedSuffStats& node_stats, const LeafModel& leaf, int depth,
                           double alpha, double beta) {
  const std::size_t num_candidates = grid.total();
  if (left_stats.size() != num_candidates) {
    throw ValidationError("split_weights: one left-child statistic per candidate is required");
  }
  SplitWeights out;
  if (num_candidates == 0) return out;

  std::vector<double> log_w(num_candidates + 1);
  for (std::size_t k = 0; k < num_candidates; ++k) {
    const GroupedSuffStats& left = left_stats[k];
    const GroupedSuffStats right = node_stats - left;
    log_w[k] = leaf_log_marginal(left, leaf.coeffs, leaf.variances, leaf.nu) +
               leaf_log_marginal(right, leaf.coeffs, leaf.variances, leaf.nu);
  }
  log_w[num_candidates] =
      std::log(no_split_prior_factor(alpha, beta, depth, num_candidates)) +
      leaf_log_marginal(node_stats, leaf.coeffs, leaf.variances, leaf.nu);
  normalize_log_weights(log_w);
  out.no_split = log_w.back();
  log_w.pop_back();
  out.candidate = std::move(log_w);
  return out;
}

namespace {

class Grower {
 public:
  Grower(std::span<const double> residual, const FeatureMatrix& X, std::span<const int> z,
         const LeafModel& leaf, const GrowOptions& opts, Rng& rng, std::span<double> fitted)
      : residual_(residual), X_(X), z_(z), leaf_(leaf), opts_(opts), rng_(rng), fitted_(fitted),
        goes_left_(X.rows(), 0) {}

  Tree run() {
    grow(0, X_.sorted_rows(), 0);
    return std::move(tree_);
  }

 private:
  GroupedSuffStats stats_of(std::span<const int> rows) const {
    GroupedSuffStats s;
    for (int i : rows) s.add(z_[static_cast<std::size_t>(i)], residual_[static_cast<std::size_t>(i)]);
    return s;
  }

  void make_leaf(int node_id, std::span<const int> rows, const GroupedSuffStats& stats) {
    const LeafPosterior post = leaf_posterior(stats, leaf_.coeffs, leaf_.variances, leaf_.nu);
    const double mu = rng_.normal(post.mean, post.variance);
    tree_.node(node_id).mu = mu;
    if (!fitted_.empty()) {
      for (int i : rows) fitted_[static_cast<std::size_t>(i)] = mu;
    }
  }

  void grow(int node_id, const std::vector<std::vector<int>>& order, int depth) {
    const std::span<const int> rows = order[0];
    const GroupedSuffStats node_stats = stats_of(rows);
    const int n_node = static_cast<int>(rows.size());
    if (depth >= opts_.max_depth || n_node < opts_.min_node_size) {
      make_leaf(node_id, rows, node_stats);
      return;
    }

    CutpointGrid grid;
    grid.vars.resize(X_.cols());
    std::vector<GroupedSuffStats> left_stats;
    values_.resize(rows.size());
    for (std::size_t j = 0; j < X_.cols(); ++j) {
      const auto& ord = order[j];
      const auto col = X_.column(j);
      for (std::size_t k = 0; k < ord.size(); ++k) values_[k] = col[static_cast<std::size_t>(ord[k])];
      grid.vars[j] = cutpoints_from_sorted(values_, opts_.max_cutpoints);
      // Single left-to-right sweep accumulating the left-child statistics.
      GroupedSuffStats running;
      std::size_t next = 0;
      const auto& positions = grid.vars[j].positions;
      for (std::size_t k = 0; k < ord.size() && next < positions.size(); ++k) {
        const auto i = static_cast<std::size_t>(ord[k]);
        running.add(z_[i], residual_[i]);
        if (static_cast<int>(k + 1) == positions[next]) {
          left_stats.push_back(running);
          ++next;
        }
      }
    }

    if (grid.total() == 0) {
      make_leaf(node_id, rows, node_stats);
      return;
    }

    const SplitWeights w =
        split_weights(grid, left_stats, node_stats, leaf_, depth, opts_.alpha, opts_.beta);
    std::vector<double> probs = w.candidate;
    probs.push_back(w.no_split);
    const std::size_t choice = rng_.categorical(probs);
    if (choice == w.candidate.size()) {
      make_leaf(node_id, rows, node_stats);
      return;
    }

    std::size_t var = 0;
    std::size_t offset = choice;
    while (offset >= grid.vars[var].values.size()) {
      offset -= grid.vars[var].values.size();
      ++var;
    }
    const double cut = grid.vars[var].values[offset];
    const int position = grid.vars[var].positions[offset];

    const auto& split_order = order[var];
    for (std::size_t k = 0; k < split_order.size(); ++k) {
      goes_left_[static_cast<std::size_t>(split_order[k])] = static_cast<int>(k) < position ? 1 : 0;
    }
    std::vector<std::vector<int>> left(X_.cols());
    std::vector<std::vector<int>> right(X_.cols());
    for (std::size_t j = 0; j < X_.cols(); ++j) {
      left[j].reserve(static_cast<std::size_t>(position));
      right[j].reserve(rows.size() - static_cast<std::size_t>(position));
      for (int i : order[j]) {
        (goes_left_[static_cast<std::size_t>(i)] ? left[j] : right[j]).push_back(i);
      }
    }

    const auto [left_id, right_id] = tree_.split_leaf(node_id, static_cast<int>(var), cut);
    grow(left_id, left, depth + 1);
    grow(right_id, right, depth + 1);
  }

  std::span<const double> residual_;
  const FeatureMatrix& X_;
  std::span<const int> z_;
  const LeafModel& leaf_;
  const GrowOptions& opts_;
  Rng& rng_;
  std::span<double> fitted_;
  std::vector<char> goes_left_;
  std::vector<double> values_;
  Tree tree_;
};

}  // namespace

Tree grow_from_root(std::span<const double> residual, const FeatureMatrix& X,
                    std::span<const int> z, const LeafModel& leaf, const GrowOptions& opts,
                    Rng& rng, std::span<double> fitted) {
  if (residual.size() != X.rows() || z.size() != X.rows()) {
    throw ValidationError("grow_from_root: residual, z and X must have matching rows");
  }
  if (!fitted.empty() && fitted.size() != X.rows()) {
    throw ValidationError("grow_from_root: fitted buffer has the wrong length");
  }
  if (X.rows() == 0) throw ValidationError("grow_from_root: empty node");
  Grower grower(residual, X, z, leaf, opts, rng, fitted);
  return grower.run();
}

}  // namespace xbcf
