#include "xbcf/draws.hpp"

#include <algorithm>

namespace xbcf {

std::vector<const Draw*> PosteriorDraws::kept() const {
  std::vector<const Draw*> out;
  for (const Draw& d : draws) {
    if (!d.burnin) out.push_back(&d);
  }
  return out;
}

std::size_t PosteriorDraws::num_kept() const {
  return static_cast<std::size_t>(
      std::count_if(draws.begin(), draws.end(), [](const Draw& d) { return !d.burnin; }));
}

int PosteriorDraws::num_chains() const {
  int max_chain = -1;
  for (const Draw& d : draws) max_chain = std::max(max_chain, d.chain);
  return max_chain + 1;
}

}  // namespace xbcf
