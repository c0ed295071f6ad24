#include "xbcf/bcf_mcmc.hpp"

#include <cmath>
#include <limits>

#include "xbcf/conjugate.hpp"
#include "xbcf/error.hpp"
#include "xbcf/parallel.hpp"

namespace xbcf {
namespace {

int leaf_of(const Tree& tree, const FeatureMatrix& X, std::size_t row) {
  int id = 0;
  while (!tree.node(id).is_leaf) {
    const TreeNode& n = tree.node(id);
    id = X(row, static_cast<std::size_t>(n.var)) <= n.cut ? n.left : n.right;
  }
  return id;
}

double leaf_value(const Tree& tree, const FeatureMatrix& X, std::size_t row) {
  return tree.node(leaf_of(tree, X, row)).mu;
}

GroupedSuffStats stats_of(std::span<const int> rows, std::span<const double> residual,
                          std::span<const int> z) {
  GroupedSuffStats s;
  for (int i : rows) s.add(z[static_cast<std::size_t>(i)], residual[static_cast<std::size_t>(i)]);
  return s;
}

// Prior split probability of a node, zero when it cannot be split.
double node_split_prob(const FeatureMatrix& X, std::span<const int> rows, int depth,
                       const GrowOptions& prior) {
  if (depth >= prior.max_depth || rows.empty() ||
      static_cast<int>(rows.size()) < prior.min_node_size) {
    return 0.0;
  }
  if (prior.max_cutpoints < 1) return 0.0;
  // Some variable must take two distinct values among the rows.
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const double first = X(static_cast<std::size_t>(rows.front()), j);
    for (int i : rows) {
      if (X(static_cast<std::size_t>(i), j) != first) return split_prior(prior.alpha, prior.beta, depth);
    }
  }
  return 0.0;
}

std::pair<std::vector<int>, std::vector<int>> partition(std::span<const int> rows,
                                                        const FeatureMatrix& X, int var,
                                                        double cut) {
  std::pair<std::vector<int>, std::vector<int>> out;
  for (int i : rows) {
    (X(static_cast<std::size_t>(i), static_cast<std::size_t>(var)) <= cut ? out.first : out.second)
        .push_back(i);
  }
  return out;
}

double log_or_neg_inf(double p) {
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace

MhStepResult mh_step(Tree tree, std::span<const double> partial_residual, std::span<const int> z,
                     const FeatureMatrix& X, const LeafModel& leaf, const GrowOptions& prior,
                     Rng& rng, std::span<double> fitted) {
  const std::size_t n = X.rows();
  if (partial_residual.size() != n || z.size() != n) {
    throw ValidationError("mh_step: residual, z and X must have matching rows");
  }
  std::vector<std::vector<int>> rows_of(tree.size());
  for (std::size_t i = 0; i < n; ++i) {
    rows_of[static_cast<std::size_t>(leaf_of(tree, X, i))].push_back(static_cast<int>(i));
  }
  const std::vector<int> depth = tree.depths();

  MhStepResult result;
  result.move = rng.bernoulli(0.5) ? TreeMove::grow : TreeMove::prune;
  double log_ratio = -std::numeric_limits<double>::infinity();
  // Applied only on acceptance.
  int target = -1;
  int grow_var = -1;
  double grow_cut = 0.0;

  if (result.move == TreeMove::grow) {
    const std::vector<int> leaves = tree.leaves();
    target = leaves[rng.index(leaves.size())];
    const auto& rows = rows_of[static_cast<std::size_t>(target)];
    const int d = depth[static_cast<std::size_t>(target)];
    const double p_node = node_split_prob(X, rows, d, prior);
    if (p_node > 0.0) {
      const CutpointGrid grid = build_cutpoints(X, rows, prior.max_cutpoints);
      std::vector<int> eligible;
      for (std::size_t j = 0; j < grid.vars.size(); ++j) {
        if (!grid.vars[j].values.empty()) eligible.push_back(static_cast<int>(j));
      }
      grow_var = eligible[rng.index(eligible.size())];
      const auto& cuts = grid.vars[static_cast<std::size_t>(grow_var)].values;
      grow_cut = cuts[rng.index(cuts.size())];
      const auto [left, right] = partition(rows, X, grow_var, grow_cut);
      const double p_left = node_split_prob(X, left, d + 1, prior);
      const double p_right = node_split_prob(X, right, d + 1, prior);

      // The split-rule prior and the rule proposal are both uniform over
      // eligible variables then cutpoints, so they cancel.
      const double log_prior = std::log(p_node) + std::log1p(-p_left) + std::log1p(-p_right) -
                               std::log1p(-p_node);
      int prunable_after = static_cast<int>(tree.prunable_nodes().size()) + 1;
      const int parent = tree.parents()[static_cast<std::size_t>(target)];
      if (parent >= 0) {
        const TreeNode& pn = tree.node(parent);
        const int sibling = pn.left == target ? pn.right : pn.left;
        if (tree.node(sibling).is_leaf) --prunable_after;
      }
      const double log_proposal =
          std::log(static_cast<double>(leaves.size())) - std::log(static_cast<double>(prunable_after));
      const double log_lik =
          leaf_log_marginal(stats_of(left, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu) +
          leaf_log_marginal(stats_of(right, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu) -
          leaf_log_marginal(stats_of(rows, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu);
      log_ratio = log_prior + log_proposal + log_lik;
    }
  } else {
    const std::vector<int> prunable = tree.prunable_nodes();
    if (!prunable.empty()) {
      target = prunable[rng.index(prunable.size())];
      const TreeNode& node = tree.node(target);
      const auto& left = rows_of[static_cast<std::size_t>(node.left)];
      const auto& right = rows_of[static_cast<std::size_t>(node.right)];
      std::vector<int> rows(left);
      rows.insert(rows.end(), right.begin(), right.end());
      const int d = depth[static_cast<std::size_t>(target)];
      const double p_node = node_split_prob(X, rows, d, prior);
      const double p_left = node_split_prob(X, left, d + 1, prior);
      const double p_right = node_split_prob(X, right, d + 1, prior);

      const double log_prior = std::log1p(-p_node) - log_or_neg_inf(p_node) -
                               std::log1p(-p_left) - std::log1p(-p_right);
      const int leaves_after = tree.num_leaves() - 1;
      const double log_proposal =
          std::log(static_cast<double>(prunable.size())) - std::log(static_cast<double>(leaves_after));
      const double log_lik =
          leaf_log_marginal(stats_of(rows, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu) -
          leaf_log_marginal(stats_of(left, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu) -
          leaf_log_marginal(stats_of(right, partial_residual, z), leaf.coeffs, leaf.variances, leaf.nu);
      // A node the prior could never have split is always pruned.
      log_ratio = std::isinf(log_prior) && log_prior > 0 ? 0.0 : log_prior + log_proposal + log_lik;
    }
  }

  result.acceptance = std::isnan(log_ratio) ? 0.0 : std::exp(std::min(0.0, log_ratio));
  if (result.acceptance > 0.0 && rng.uniform() < result.acceptance) {
    result.accepted = true;
    if (result.move == TreeMove::grow) {
      tree.split_leaf(target, grow_var, grow_cut);
    } else {
      tree.collapse(target, 0.0);
    }
  }

  // Redraw all leaf means against the (possibly updated) partition.
  std::vector<GroupedSuffStats> leaf_stats(tree.size());
  std::vector<int> assignment(n);
  for (std::size_t i = 0; i < n; ++i) {
    assignment[i] = leaf_of(tree, X, i);
    leaf_stats[static_cast<std::size_t>(assignment[i])].add(z[i], partial_residual[i]);
  }
  for (int id : tree.leaves()) {
    const LeafPosterior post =
        leaf_posterior(leaf_stats[static_cast<std::size_t>(id)], leaf.coeffs, leaf.variances, leaf.nu);
    tree.node(id).mu = rng.normal(post.mean, post.variance);
  }
  if (!fitted.empty()) {
    for (std::size_t i = 0; i < n; ++i) fitted[i] = tree.node(assignment[i]).mu;
  }
  result.tree = std::move(tree);
  return result;
}

PosteriorDraws bcf_fit_prepared(const PreparedData& data, const Hyperparams& hp,
                                std::size_t num_covariates, const McmcSchedule& schedule,
                                const std::optional<Draw>& init, Rng& rng) {
  hp.validate();
  if (schedule.burnin < 0 || schedule.iterations < 0) {
    throw ValidationError("bcf_fit: iteration counts must be non-negative");
  }
  const std::size_t n = data.size();
  const auto L = static_cast<std::size_t>(hp.num_trees_mu);
  const auto K = static_cast<std::size_t>(hp.num_trees_tau);

  Draw state;
  if (init) {
    if (init->prognostic.trees.size() != L || init->treatment.trees.size() != K) {
      throw ValidationError("bcf_fit: initial forests have " +
                            std::to_string(init->prognostic.trees.size()) + "/" +
                            std::to_string(init->treatment.trees.size()) +
                            " trees, hyperparameters expect " + std::to_string(L) + "/" +
                            std::to_string(K));
    }
    for (const Tree& t : init->prognostic.trees) {
      if (!t.is_valid(data.mu_features.cols())) throw ValidationError("bcf_fit: invalid initial tree");
    }
    for (const Tree& t : init->treatment.trees) {
      if (!t.is_valid(data.tau_features.cols())) throw ValidationError("bcf_fit: invalid initial tree");
    }
    state = *init;
    state.burnin = false;
  } else {
    state.prognostic = Forest{ForestRole::prognostic, std::vector<Tree>(L, Tree(0.0))};
    state.treatment = Forest{ForestRole::treatment, std::vector<Tree>(K, Tree(0.0))};
    state.scale = ScaleState{};
  }
  state.scale.y_mean = data.y_mean;
  state.scale.y_sd = data.y_sd;

  PosteriorDraws out;
  out.hp = hp;
  out.num_covariates = num_covariates;
  const int total = schedule.burnin + schedule.iterations;
  if (total == 0) {
    if (init) state = *init;
    out.draws.push_back(state);
    return out;
  }

  ResidualState residuals(data.y, data.z, L, K);
  std::vector<double> buffer(n);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      buffer[i] = leaf_value(state.prognostic.trees[l], data.mu_features, i);
    }
    residuals.set_mu_tree_fit(l, buffer);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      buffer[i] = leaf_value(state.treatment.trees[k], data.tau_features, i);
    }
    residuals.set_tau_tree_fit(k, buffer);
  }
  residuals.refresh(state.scale);

  const GrowOptions prior = GrowOptions::from(hp);
  const double nu_mu = hp.leaf_variance_mu();
  const double nu_tau = hp.leaf_variance_tau();
  ScaleState& scale = state.scale;
  out.draws.reserve(static_cast<std::size_t>(total));
  for (int iter = 0; iter < total; ++iter) {
    for (std::size_t l = 0; l < L; ++l) {
      const std::vector<double> partial = residuals.mu_partial_residual(l, scale);
      const LeafModel leaf{scale.prognostic_coeffs(), scale.variances(), nu_mu};
      MhStepResult step = mh_step(std::move(state.prognostic.trees[l]), partial, data.z,
                                  data.mu_features, leaf, prior, rng, buffer);
      state.prognostic.trees[l] = std::move(step.tree);
      residuals.set_mu_tree_fit(l, buffer);
      residuals.refresh(scale);
    }
    draw_scale_parameters(residuals, scale, data.z, hp, rng);
    for (std::size_t k = 0; k < K; ++k) {
      const std::vector<double> partial = residuals.tau_partial_residual(k, scale);
      const LeafModel leaf{scale.treatment_coeffs(), scale.variances(), nu_tau};
      MhStepResult step = mh_step(std::move(state.treatment.trees[k]), partial, data.z,
                                  data.tau_features, leaf, prior, rng, buffer);
      state.treatment.trees[k] = std::move(step.tree);
      residuals.set_tau_tree_fit(k, buffer);
      residuals.refresh(scale);
    }
    draw_scale_parameters(residuals, scale, data.z, hp, rng);
    state.burnin = iter < schedule.burnin;
    out.draws.push_back(state);
  }
  return out;
}

PosteriorDraws bcf_fit(const Dataset& data, const Hyperparams& hp, const McmcSchedule& schedule,
                       const std::optional<Draw>& init, Rng& rng) {
  std::optional<std::pair<double, double>> standardization;
  if (init) standardization = std::make_pair(init->scale.y_mean, init->scale.y_sd);
  const PreparedData prepared = prepare_data(data, standardization);
  PosteriorDraws out = bcf_fit_prepared(prepared, hp, data.num_covariates(), schedule, init, rng);
  out.covariate_names = data.covariate_names;
  return out;
}

PosteriorDraws warm_start(const Dataset& data, const PosteriorDraws& xbcf_draws,
                          const WarmStartOptions& options) {
  const auto kept = xbcf_draws.kept();
  if (kept.empty()) throw ValidationError("warm_start: no post-burn-in snapshots to start from");
  if (options.iterations_per_chain < 0) {
    throw ValidationError("warm_start: iterations per chain must be non-negative");
  }
  std::size_t chains = kept.size();
  if (options.max_chains > 0) chains = std::min(chains, static_cast<std::size_t>(options.max_chains));

  const ScaleState& s0 = kept.front()->scale;
  const PreparedData prepared = prepare_data(data, std::make_pair(s0.y_mean, s0.y_sd));
  std::vector<PosteriorDraws> per_chain(chains);
  const McmcSchedule schedule{0, options.iterations_per_chain};
  parallel_for(chains, options.threads, [&](std::size_t c) {
    Rng rng = Rng::stream(options.seed, c);
    per_chain[c] = bcf_fit_prepared(prepared, xbcf_draws.hp, data.num_covariates(), schedule,
                                    *kept[c], rng);
  });

  PosteriorDraws out;
  out.hp = xbcf_draws.hp;
  out.num_covariates = xbcf_draws.num_covariates;
  out.covariate_names = xbcf_draws.covariate_names;
  for (std::size_t c = 0; c < chains; ++c) {
    for (Draw& d : per_chain[c].draws) {
      d.chain = static_cast<int>(c);
      d.burnin = false;
      out.draws.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace xbcf
