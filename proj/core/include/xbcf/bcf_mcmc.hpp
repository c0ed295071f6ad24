#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "xbcf/draws.hpp"
#include "xbcf/gfr.hpp"
#include "xbcf/rng.hpp"
#include "xbcf/xbcf.hpp"

namespace xbcf {

enum class TreeMove { grow, prune };

struct MhStepResult {
  Tree tree;
  TreeMove move = TreeMove::grow;
  bool accepted = false;
  // min(1, MH ratio); zero for impossible proposals.
  double acceptance = 0.0;
};

// One GROW/PRUNE Metropolis-Hastings update of `tree` against a partial
// residual, followed by a redraw of every leaf mean from its conjugate
// posterior. `prior` supplies alpha, beta and the growability limits
// (max_depth, min_node_size, max_cutpoints). When `fitted` is non-empty it
// receives each row's new leaf mean.
MhStepResult mh_step(Tree tree, std::span<const double> partial_residual, std::span<const int> z,
                     const FeatureMatrix& X, const LeafModel& leaf, const GrowOptions& prior,
                     Rng& rng, std::span<double> fitted = {});

struct McmcSchedule {
  int burnin = 1000;
  int iterations = 1000;  // kept, after burn-in
};

// Gibbs scan per iteration: one mh_step per prognostic tree, scale draws,
// one mh_step per treatment tree, scale draws. Cold start (no `init`) uses
// root-only trees. With zero total iterations the initial state is returned
// as the single draw.
PosteriorDraws bcf_fit(const Dataset& data, const Hyperparams& hp, const McmcSchedule& schedule,
                       const std::optional<Draw>& init, Rng& rng);

// Same, over data that has already been prepared with the init's
// standardization.
PosteriorDraws bcf_fit_prepared(const PreparedData& data, const Hyperparams& hp,
                                std::size_t num_covariates, const McmcSchedule& schedule,
                                const std::optional<Draw>& init, Rng& rng);

struct WarmStartOptions {
  int iterations_per_chain = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  // Caps the number of chains (0 = one per post-burn-in snapshot).
  int max_chains = 0;
};

// One MH chain per post-burn-in snapshot of `xbcf_draws`, each started at
// that snapshot with no extra burn-in and its own random stream. Draws are
// pooled in chain order with `Draw::chain` recording provenance.
PosteriorDraws warm_start(const Dataset& data, const PosteriorDraws& xbcf_draws,
                          const WarmStartOptions& options);

}  // namespace xbcf
