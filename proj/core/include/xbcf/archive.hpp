#pragma once

#include <string>

#include "xbcf/draws.hpp"

namespace xbcf {

inline constexpr int kArchiveSchemaVersion = 1;

// JSON document: schema_version, hyperparams, standardization, covariate
// names and one record per draw. Keys are emitted in sorted order and doubles
// at round-trip precision, so serialize(deserialize(s)) == s.
std::string serialize_archive(const PosteriorDraws& draws);
PosteriorDraws deserialize_archive(const std::string& text);

void save_archive(const std::string& path, const PosteriorDraws& draws);
PosteriorDraws load_archive(const std::string& path);

}  // namespace xbcf
