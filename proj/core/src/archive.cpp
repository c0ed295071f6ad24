#include "xbcf/archive.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xbcf/error.hpp"

namespace xbcf {
namespace {

using nlohmann::json;

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const TreeNode& n = tree.node(static_cast<int>(id));
    nodes.push_back({{"id", id},
                     {"kind", n.is_leaf ? "leaf" : "internal"},
                     {"var", n.var},
                     {"cut", n.cut},
                     {"left", n.left},
                     {"right", n.right},
                     {"mu", n.mu}});
  }
  return nodes;
}

Tree tree_from_json(const json& nodes) {
  std::vector<TreeNode> out;
  out.reserve(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const json& j = nodes[k];
    if (j.at("id").get<std::size_t>() != k) throw ValidationError("archive: node ids must be 0..m-1 in order");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "leaf" && kind != "internal") throw ValidationError("archive: unknown node kind '" + kind + "'");
    out.push_back(TreeNode{kind == "leaf", j.at("var").get<int>(), j.at("cut").get<double>(),
                           j.at("left").get<int>(), j.at("right").get<int>(),
                           j.at("mu").get<double>()});
  }
  if (out.empty()) throw ValidationError("archive: tree without nodes");
  return Tree(std::move(out));
}

json forest_to_json(const Forest& forest) {
  json trees = json::array();
  for (const Tree& t : forest.trees) trees.push_back(tree_to_json(t));
  return trees;
}

Forest forest_from_json(const json& j, ForestRole role, std::size_t width) {
  Forest forest{role, {}};
  for (const json& t : j) {
    forest.trees.push_back(tree_from_json(t));
    if (!forest.trees.back().is_valid(width)) throw ValidationError("archive: malformed tree");
  }
  return forest;
}

json hyperparams_to_json(const Hyperparams& hp) {
  return {{"num_trees_mu", hp.num_trees_mu}, {"num_trees_tau", hp.num_trees_tau},
          {"sweeps", hp.sweeps},             {"burnin", hp.burnin},
          {"alpha", hp.alpha},               {"beta", hp.beta},
          {"nu_mu", hp.nu_mu},               {"nu_tau", hp.nu_tau},
          {"kappa0", hp.kappa0},             {"kappa1", hp.kappa1},
          {"s0_prior", hp.s0_prior},         {"s1_prior", hp.s1_prior},
          {"max_cutpoints", hp.max_cutpoints}, {"min_node_size", hp.min_node_size},
          {"max_depth", hp.max_depth},       {"seed", hp.seed}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.num_trees_mu = j.at("num_trees_mu").get<int>();
  hp.num_trees_tau = j.at("num_trees_tau").get<int>();
  hp.sweeps = j.at("sweeps").get<int>();
  hp.burnin = j.at("burnin").get<int>();
  hp.alpha = j.at("alpha").get<double>();
  hp.beta = j.at("beta").get<double>();
  hp.nu_mu = j.at("nu_mu").get<double>();
  hp.nu_tau = j.at("nu_tau").get<double>();
  hp.kappa0 = j.at("kappa0").get<double>();
  hp.kappa1 = j.at("kappa1").get<double>();
  hp.s0_prior = j.at("s0_prior").get<double>();
  hp.s1_prior = j.at("s1_prior").get<double>();
  hp.max_cutpoints = j.at("max_cutpoints").get<int>();
  hp.min_node_size = j.at("min_node_size").get<int>();
  hp.max_depth = j.at("max_depth").get<int>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.validate();
  return hp;
}

}  // namespace

std::string serialize_archive(const PosteriorDraws& draws) {
  json doc;
  doc["schema_version"] = kArchiveSchemaVersion;
  doc["hyperparams"] = hyperparams_to_json(draws.hp);
  doc["num_covariates"] = draws.num_covariates;
  doc["covariate_names"] = draws.covariate_names;
  double y_mean = 0.0, y_sd = 1.0;
  if (!draws.draws.empty()) {
    y_mean = draws.draws.front().scale.y_mean;
    y_sd = draws.draws.front().scale.y_sd;
  }
  doc["standardization"] = {{"y_mean", y_mean}, {"y_sd", y_sd}};
  json records = json::array();
  for (const Draw& d : draws.draws) {
    if (d.scale.y_mean != y_mean || d.scale.y_sd != y_sd) {
      throw ValidationError("archive: draws disagree on the outcome standardization");
    }
    records.push_back({{"prognostic", forest_to_json(d.prognostic)},
                       {"treatment", forest_to_json(d.treatment)},
                       {"a", d.scale.a},
                       {"b0", d.scale.b0},
                       {"b1", d.scale.b1},
                       {"sigma0_sq", d.scale.sigma0_sq},
                       {"sigma1_sq", d.scale.sigma1_sq},
                       {"burnin", d.burnin},
                       {"chain", d.chain}});
  }
  doc["draws"] = std::move(records);
  return doc.dump() + "\n";
}

PosteriorDraws deserialize_archive(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("archive: not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kArchiveSchemaVersion) {
      throw ValidationError("archive: unsupported schema_version " + std::to_string(version));
    }
    PosteriorDraws out;
    out.hp = hyperparams_from_json(doc.at("hyperparams"));
    out.num_covariates = doc.at("num_covariates").get<std::size_t>();
    out.covariate_names = doc.at("covariate_names").get<std::vector<std::string>>();
    const double y_mean = doc.at("standardization").at("y_mean").get<double>();
    const double y_sd = doc.at("standardization").at("y_sd").get<double>();
    if (!(y_sd > 0.0)) throw ValidationError("archive: y_sd must be positive");
    for (const json& r : doc.at("draws")) {
      Draw d;
      d.prognostic = forest_from_json(r.at("prognostic"), ForestRole::prognostic, out.num_covariates + 1);
      d.treatment = forest_from_json(r.at("treatment"), ForestRole::treatment, out.num_covariates);
      d.scale = ScaleState{r.at("a").get<double>(),         r.at("b0").get<double>(),
                           r.at("b1").get<double>(),        r.at("sigma0_sq").get<double>(),
                           r.at("sigma1_sq").get<double>(), y_mean,
                           y_sd};
      if (!(d.scale.sigma0_sq > 0.0 && d.scale.sigma1_sq > 0.0)) {
        throw ValidationError("archive: variances must be positive");
      }
      d.burnin = r.at("burnin").get<bool>();
      d.chain = r.at("chain").get<int>();
      out.draws.push_back(std::move(d));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("archive: ") + e.what());
  }
}

void save_archive(const std::string& path, const PosteriorDraws& draws) {
  const std::string text = serialize_archive(draws);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

PosteriorDraws load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_archive(buf.str());
}

}  // namespace xbcf
