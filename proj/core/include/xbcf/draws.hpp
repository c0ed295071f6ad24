#pragma once

#include <vector>

#include "xbcf/tree.hpp"
#include "xbcf/types.hpp"

namespace xbcf {

// One posterior snapshot of both forests and the scale parameters.
struct Draw {
  Forest prognostic{ForestRole::prognostic, {}};
  Forest treatment{ForestRole::treatment, {}};
  ScaleState scale;
  bool burnin = false;
  int chain = 0;

  bool operator==(const Draw&) const = default;
};

struct PosteriorDraws {
  Hyperparams hp;
  std::size_t num_covariates = 0;
  std::vector<std::string> covariate_names;
  std::vector<Draw> draws;

  std::vector<const Draw*> kept() const;
  std::size_t num_kept() const;
  int num_chains() const;

  bool operator==(const PosteriorDraws&) const = default;
};

}  // namespace xbcf
