#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xbcf/bcf_mcmc.hpp"
#include "xbcf/types.hpp"
#include "xbcf/xbcf.hpp"

namespace xbcf::sim {

enum class Prognostic { linear, nonlinear };
enum class Treatment { homogeneous, heterogeneous };

// Five covariates: x1, x2, x3 standard normal; x4 a three-level categorical
// coded 1, 2, 3; x5 a dichotomous indicator coded 0, 1.
struct DGPConfig {
  std::size_t n = 500;
  Prognostic prognostic = Prognostic::linear;
  Treatment treatment = Treatment::homogeneous;
  std::uint64_t seed = 1;

  std::string label() const;
  void validate() const;
};

struct SimulatedData {
  Dataset data;  // pi_hat holds the true propensity
  std::vector<double> tau_true;
  std::vector<double> mu_true;
  std::vector<double> pi_true;
};

// g(1) = 2, g(2) = -1, g(3) = -4.
double g_level(int level);
double prognostic_value(Prognostic kind, double x1, double x3, int x4);
double treatment_value(Treatment kind, double x2, double x5);

SimulatedData generate(const DGPConfig& config);

struct MetricsRow {
  double ate_error = 0.0;  // signed, estimate minus truth
  double cate_rmse = 0.0;
  double ate_cover = 0.0;
  double cate_cover = 0.0;
  double ate_il = 0.0;
  double cate_il = 0.0;
};

MetricsRow score(const CateSummary& estimates, const SimulatedData& truth);

enum class Method { xbcf, bcf_cold, ws_bcf };
std::string to_string(Method m);
Method method_from_string(const std::string& name);
Prognostic prognostic_from_string(const std::string& name);
Treatment treatment_from_string(const std::string& name);

struct BenchmarkOptions {
  int reps = 20;
  int threads = 1;
  bool true_propensity = false;
  Hyperparams hp;
  McmcSchedule cold{1000, 1000};
  int ws_iterations = 100;
  double level = 0.95;
  std::uint64_t seed = 1;
};

// Per-replication record, kept so callers can inspect failures and spreads.
struct RepResult {
  std::string config;
  Method method = Method::xbcf;
  int rep = 0;
  bool ok = false;
  std::string error;
  MetricsRow metrics;
  double seconds = 0.0;
};

struct BenchmarkRow {
  std::string config;
  Method method = Method::xbcf;
  int reps_ok = 0;
  int reps_failed = 0;
  double ate_rmse = 0.0;  // root of the mean squared ATE error
  double cate_rmse = 0.0;
  double ate_cover = 0.0;
  double cate_cover = 0.0;
  double ate_il = 0.0;
  double cate_il = 0.0;
  double seconds = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<RepResult> reps;
};

BenchmarkResult run_benchmark(const std::vector<DGPConfig>& configs,
                              const std::vector<Method>& methods, const BenchmarkOptions& options);

std::vector<BenchmarkRow> aggregate(const std::vector<RepResult>& reps,
                                    const std::vector<DGPConfig>& configs,
                                    const std::vector<Method>& methods);

}  // namespace xbcf::sim
