#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "xbcf/archive.hpp"
#include "xbcf/bcf_mcmc.hpp"
#include "xbcf/csv.hpp"
#include "xbcf/error.hpp"
#include "xbcf/propensity.hpp"
#include "xbcf/simulation.hpp"
#include "xbcf/subgroup.hpp"
#include "xbcf/xbcf.hpp"

namespace xbcf::cli {
namespace {

// Columns written by `simulate` that must never leak into X.
const std::vector<std::string> kTruthColumns{"pi_true", "mu_true", "tau_true"};

struct DataFlags {
  std::string path;
  std::string outcome = "y";
  std::string treatment = "z";
  std::string propensity = "estimate";
  std::string propensity_col = "pi";
  char delimiter = ',';
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.path, "input CSV")->required();
  cmd->add_option("--outcome", f.outcome, "outcome column");
  cmd->add_option("--treatment", f.treatment, "treatment column");
  cmd->add_option("--propensity", f.propensity, "propensity source")
      ->check(CLI::IsMember({"column", "estimate", "true"}));
  cmd->add_option("--propensity-col", f.propensity_col, "propensity column for --propensity column");
  cmd->add_option("--delimiter", f.delimiter, "field delimiter");
}

Dataset load_data(const DataFlags& f, std::ostream& err) {
  const Table table = read_table_file(f.path, f.delimiter);
  CsvOptions opts;
  opts.outcome_col = f.outcome;
  opts.treatment_col = f.treatment;
  opts.delimiter = f.delimiter;
  for (const auto& c : kTruthColumns) {
    if (table.find(c)) opts.ignore_cols.push_back(c);
  }
  if (f.propensity == "column") {
    opts.propensity_col = f.propensity_col;
  } else if (f.propensity == "true") {
    if (!table.find("pi_true")) throw ValidationError("--propensity true needs a pi_true column");
    opts.propensity_col = "pi_true";
  }
  Dataset data = dataset_from_table(table, opts);
  if (f.propensity == "estimate") {
    const PropensityFit p = estimate_propensity(data.X, data.z);
    if (p.warning()) {
      err << "warning: propensity model did not converge after " << p.iterations
          << " iterations; " << p.clipped << " estimates clipped\n";
    }
    data.pi_hat = p.pi;
  }
  return data;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Evaluation covariates: the archive's named columns when present, otherwise
// everything but the outcome, treatment and truth columns.
Matrix eval_covariates(const Table& table, const PosteriorDraws& draws, const DataFlags& f) {
  if (!draws.covariate_names.empty()) return covariates_from_table(table, draws.covariate_names);
  std::vector<std::string> names;
  for (const auto& h : table.header) {
    if (h == f.outcome || h == f.treatment || h == f.propensity_col) continue;
    if (std::find(kTruthColumns.begin(), kTruthColumns.end(), h) != kTruthColumns.end()) continue;
    names.push_back(h);
  }
  if (names.size() != draws.num_covariates) {
    throw ValidationError("data has " + std::to_string(names.size()) + " covariates, archive expects " +
                          std::to_string(draws.num_covariates));
  }
  return covariates_from_table(table, names);
}

std::string cate_table_text(const CateSummary& s) {
  std::ostringstream out;
  write_cate_table(out, s);
  return out.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"xbcf: accelerated Bayesian causal forests", "xbcf"};
  app.require_subcommand(1);

  Hyperparams hp;
  DataFlags data_flags;
  std::uint64_t seed = 1;
  std::string out_path;
  std::string archive_path;
  std::string cate_path;
  double level = 0.95;

  // fit
  CLI::App* fit_cmd = app.add_subcommand("fit", "grow-from-root fit; writes an archive and a CATE table");
  add_data_flags(fit_cmd, data_flags);
  fit_cmd->add_option("--sweeps", hp.sweeps, "total sweeps");
  fit_cmd->add_option("--burnin", hp.burnin, "burn-in sweeps");
  fit_cmd->add_option("--trees-mu", hp.num_trees_mu, "prognostic trees");
  fit_cmd->add_option("--trees-tau", hp.num_trees_tau, "treatment trees");
  fit_cmd->add_option("--alpha", hp.alpha);
  fit_cmd->add_option("--beta", hp.beta);
  fit_cmd->add_option("--max-cutpoints", hp.max_cutpoints);
  fit_cmd->add_option("--min-node-size", hp.min_node_size);
  fit_cmd->add_option("--max-depth", hp.max_depth);
  fit_cmd->add_option("--seed", seed);
  fit_cmd->add_option("--level", level, "credible level");
  fit_cmd->add_option("--archive", archive_path, "archive to write")->required();
  fit_cmd->add_option("--out", out_path, "CATE table to write (stdout if omitted)");

  // predict
  CLI::App* predict_cmd = app.add_subcommand("predict", "CATE table from an archive");
  predict_cmd->add_option("--archive", archive_path)->required();
  predict_cmd->add_option("--data", data_flags.path)->required();
  predict_cmd->add_option("--outcome", data_flags.outcome);
  predict_cmd->add_option("--treatment", data_flags.treatment);
  predict_cmd->add_option("--propensity-col", data_flags.propensity_col);
  predict_cmd->add_option("--delimiter", data_flags.delimiter);
  predict_cmd->add_option("--level", level);
  predict_cmd->add_option("--out", out_path);

  // warmstart
  int iters = 100;
  int chains = 0;
  int threads = 1;
  CLI::App* ws_cmd = app.add_subcommand("warmstart", "MH chains started at the archived forests");
  add_data_flags(ws_cmd, data_flags);
  ws_cmd->add_option("--archive", archive_path, "archive from fit")->required();
  ws_cmd->add_option("--iters", iters, "iterations per chain");
  ws_cmd->add_option("--chains", chains, "maximum number of chains (0 = all snapshots)");
  ws_cmd->add_option("--threads", threads);
  ws_cmd->add_option("--seed", seed);
  ws_cmd->add_option("--level", level);
  ws_cmd->add_option("--out", out_path, "pooled archive to write")->required();
  ws_cmd->add_option("--cate", cate_path, "optional CATE table of the pooled draws");

  // simulate
  sim::DGPConfig dgp;
  std::string prognostic = "linear";
  std::string treatment = "homogeneous";
  CLI::App* sim_cmd = app.add_subcommand("simulate", "draw a synthetic dataset with truth columns");
  sim_cmd->add_option("--n", dgp.n);
  sim_cmd->add_option("--prognostic", prognostic)->check(CLI::IsMember({"linear", "nonlinear"}));
  sim_cmd->add_option("--treatment", treatment)->check(CLI::IsMember({"homogeneous", "heterogeneous"}));
  sim_cmd->add_option("--seed", seed);
  sim_cmd->add_option("--out", out_path);

  // benchmark
  sim::BenchmarkOptions bench;
  std::vector<std::string> configs{"linear/homogeneous", "linear/heterogeneous",
                                   "nonlinear/homogeneous", "nonlinear/heterogeneous"};
  std::vector<std::string> methods{"xbcf", "bcf", "ws_bcf"};
  std::size_t bench_n = 500;
  std::string bench_prop = "estimate";
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "simulation study over configs and methods");
  bench_cmd->add_option("--n", bench_n);
  bench_cmd->add_option("--reps", bench.reps);
  bench_cmd->add_option("--configs", configs, "prognostic/treatment pairs");
  bench_cmd->add_option("--methods", methods)->check(CLI::IsMember({"xbcf", "bcf", "ws_bcf"}));
  bench_cmd->add_option("--propensity", bench_prop)->check(CLI::IsMember({"estimate", "true"}));
  bench_cmd->add_option("--sweeps", hp.sweeps);
  bench_cmd->add_option("--burnin", hp.burnin);
  bench_cmd->add_option("--trees-mu", hp.num_trees_mu);
  bench_cmd->add_option("--trees-tau", hp.num_trees_tau);
  bench_cmd->add_option("--iters", bench.ws_iterations, "warm-start iterations per chain");
  bench_cmd->add_option("--cold-burnin", bench.cold.burnin);
  bench_cmd->add_option("--cold-iters", bench.cold.iterations);
  bench_cmd->add_option("--threads", bench.threads);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--out", out_path);

  // subgroups
  int max_depth = 3;
  int min_leaf = 20;
  int group_a = 0;
  int group_b = 0;
  CLI::App* sub_cmd = app.add_subcommand("subgroups", "CART summary of CATE point estimates");
  sub_cmd->add_option("--cate", cate_path, "CATE table")->required();
  sub_cmd->add_option("--data", data_flags.path, "covariates")->required();
  sub_cmd->add_option("--outcome", data_flags.outcome);
  sub_cmd->add_option("--treatment", data_flags.treatment);
  sub_cmd->add_option("--propensity-col", data_flags.propensity_col);
  sub_cmd->add_option("--delimiter", data_flags.delimiter);
  sub_cmd->add_option("--archive", archive_path, "posterior draws for subgroup differences");
  sub_cmd->add_option("--max-depth", max_depth);
  sub_cmd->add_option("--min-leaf", min_leaf);
  sub_cmd->add_option("--group-a", group_a, "defaults to the highest-effect subgroup");
  sub_cmd->add_option("--group-b", group_b, "defaults to the lowest-effect subgroup");
  sub_cmd->add_option("--level", level);
  sub_cmd->add_option("--out", out_path);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  auto emit = [&](const std::string& text) {
    if (out_path.empty()) {
      out << text;
    } else {
      write_text(out_path, text);
    }
  };

  try {
    if (*fit_cmd) {
      hp.seed = seed;
      const Dataset data = load_data(data_flags, err);
      const PosteriorDraws draws = fit(data, hp);
      save_archive(archive_path, draws);
      emit(cate_table_text(summarize(draws, data.X, level)));
    } else if (*predict_cmd) {
      const PosteriorDraws draws = load_archive(archive_path);
      const Table table = read_table_file(data_flags.path, data_flags.delimiter);
      emit(cate_table_text(summarize(draws, eval_covariates(table, draws, data_flags), level)));
    } else if (*ws_cmd) {
      const PosteriorDraws init = load_archive(archive_path);
      const Dataset data = load_data(data_flags, err);
      const PosteriorDraws pooled = warm_start(data, init, WarmStartOptions{iters, seed, threads, chains});
      save_archive(out_path, pooled);
      if (!cate_path.empty()) write_text(cate_path, cate_table_text(summarize(pooled, data.X, level)));
    } else if (*sim_cmd) {
      dgp.prognostic = sim::prognostic_from_string(prognostic);
      dgp.treatment = sim::treatment_from_string(treatment);
      dgp.seed = seed;
      std::ostringstream text;
      write_simulated(text, sim::generate(dgp));
      emit(text.str());
    } else if (*bench_cmd) {
      std::vector<sim::DGPConfig> dgps;
      for (const auto& c : configs) {
        const auto slash = c.find('/');
        if (slash == std::string::npos) throw ValidationError("config '" + c + "' is not prognostic/treatment");
        sim::DGPConfig d;
        d.n = bench_n;
        d.prognostic = sim::prognostic_from_string(c.substr(0, slash));
        d.treatment = sim::treatment_from_string(c.substr(slash + 1));
        d.seed = seed;
        dgps.push_back(d);
      }
      std::vector<sim::Method> ms;
      for (const auto& m : methods) ms.push_back(sim::method_from_string(m));
      bench.hp = hp;
      bench.true_propensity = bench_prop == "true";
      bench.seed = seed;
      const sim::BenchmarkResult result = sim::run_benchmark(dgps, ms, bench);
      for (const auto& r : result.reps) {
        if (!r.ok) err << "warning: " << r.config << " " << sim::to_string(r.method) << " rep " << r.rep
                       << " failed: " << r.error << '\n';
      }
      std::ostringstream text;
      write_benchmark_table(text, result.rows);
      emit(text.str());
    } else if (*sub_cmd) {
      const Table cate_table = read_table_file(cate_path);
      const std::vector<double> cate = read_cate_means(cate_table);
      const Table table = read_table_file(data_flags.path, data_flags.delimiter);
      std::optional<PosteriorDraws> draws;
      if (!archive_path.empty()) draws = load_archive(archive_path);
      Matrix X;
      std::vector<std::string> names;
      if (draws) {
        names = draws->covariate_names;
        X = eval_covariates(table, *draws, data_flags);
      } else {
        for (const auto& h : table.header) {
          if (h == data_flags.outcome || h == data_flags.treatment || h == data_flags.propensity_col) continue;
          if (std::find(kTruthColumns.begin(), kTruthColumns.end(), h) != kTruthColumns.end()) continue;
          names.push_back(h);
        }
        X = covariates_from_table(table, names);
      }
      const SubgroupTree tree = subgroup_tree(cate, X, max_depth, min_leaf, names);
      std::ostringstream text;
      text << tree.describe();
      if (draws && tree.subgroups.size() > 1) {
        auto by_mean = [](const Subgroup& a, const Subgroup& b) { return a.mean_cate < b.mean_cate; };
        const int a = group_a > 0 ? group_a
                                  : std::max_element(tree.subgroups.begin(), tree.subgroups.end(), by_mean)->id;
        const int b = group_b > 0 ? group_b
                                  : std::min_element(tree.subgroups.begin(), tree.subgroups.end(), by_mean)->id;
        const SubgroupDifference diff = subgroup_posterior(*draws, X, tree.assignment, a, b, level);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "difference subgroup %d - subgroup %d: mean %.4f, %g%% interval [%.4f, %.4f]\n",
                      a, b, diff.mean, 100.0 * level, diff.lo, diff.hi);
        text << buf;
      }
      emit(text.str());
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace xbcf::cli
