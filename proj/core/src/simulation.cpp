#include "xbcf/simulation.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "xbcf/error.hpp"
#include "xbcf/parallel.hpp"
#include "xbcf/propensity.hpp"

namespace xbcf::sim {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

std::string DGPConfig::label() const {
  return std::string(prognostic == Prognostic::linear ? "linear" : "nonlinear") + "/" +
         (treatment == Treatment::homogeneous ? "homogeneous" : "heterogeneous") + "/n" +
         std::to_string(n);
}

void DGPConfig::validate() const {
  if (n < 10) throw ValidationError("simulate: n must be at least 10");
}

double g_level(int level) {
  switch (level) {
    case 1: return 2.0;
    case 2: return -1.0;
    case 3: return -4.0;
    default: throw ValidationError("g: level must be 1, 2 or 3");
  }
}

double prognostic_value(Prognostic kind, double x1, double x3, int x4) {
  if (kind == Prognostic::linear) return 1.0 + g_level(x4) + x1 * x3;
  return -6.0 + g_level(x4) + 6.0 * std::abs(x3 - 1.0);
}

double treatment_value(Treatment kind, double x2, double x5) {
  return kind == Treatment::homogeneous ? 3.0 : 1.0 + 2.0 * x2 * x5;
}

SimulatedData generate(const DGPConfig& config) {
  config.validate();
  const std::size_t n = config.n;
  Rng rng(config.seed);
  SimulatedData out;
  Dataset& d = out.data;
  d.X = Matrix(n, 5);
  d.covariate_names = {"x1", "x2", "x3", "x4", "x5"};
  d.y.resize(n);
  d.z.resize(n);
  out.mu_true.resize(n);
  out.tau_true.resize(n);
  out.pi_true.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    d.X(i, 0) = rng.normal();
    d.X(i, 1) = rng.normal();
    d.X(i, 2) = rng.normal();
    d.X(i, 3) = static_cast<double>(1 + rng.index(3));
    d.X(i, 4) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    out.mu_true[i] = prognostic_value(config.prognostic, d.X(i, 0), d.X(i, 2),
                                      static_cast<int>(d.X(i, 3)));
    out.tau_true[i] = treatment_value(config.treatment, d.X(i, 1), d.X(i, 4));
  }

  const double mu_mean =
      std::accumulate(out.mu_true.begin(), out.mu_true.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double m : out.mu_true) ss += (m - mu_mean) * (m - mu_mean);
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  const double scale = s > 0.0 ? 3.0 / s : 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const double base = 0.8 * normal_cdf(scale * out.mu_true[i] - 0.5 * d.X(i, 0)) + 0.05;
    double pi = 0.0;
    // u = 0 with a vanishing Phi term lands exactly on 0.05; redraw.
    do {
      pi = base + rng.uniform() / 10.0;
    } while (!(pi > 0.05 && pi < 0.95));
    out.pi_true[i] = pi;
    d.z[i] = rng.bernoulli(pi) ? 1 : 0;
    d.y[i] = out.mu_true[i] + out.tau_true[i] * d.z[i] + rng.normal();
  }
  d.pi_hat = out.pi_true;
  return out;
}

MetricsRow score(const CateSummary& est, const SimulatedData& truth) {
  const std::size_t n = truth.tau_true.size();
  if (est.mean.size() != n || est.lo.size() != n || est.hi.size() != n) {
    throw ValidationError("score: estimates have " + std::to_string(est.mean.size()) +
                          " rows, truth has " + std::to_string(n));
  }
  MetricsRow m;
  if (n == 0) return m;
  double se = 0.0, covered = 0.0, il = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = est.mean[i] - truth.tau_true[i];
    se += err * err;
    covered += (est.lo[i] <= truth.tau_true[i] && truth.tau_true[i] <= est.hi[i]) ? 1.0 : 0.0;
    il += est.hi[i] - est.lo[i];
  }
  const double nn = static_cast<double>(n);
  const double ate_true = std::accumulate(truth.tau_true.begin(), truth.tau_true.end(), 0.0) / nn;
  m.cate_rmse = std::sqrt(se / nn);
  m.cate_cover = covered / nn;
  m.cate_il = il / nn;
  m.ate_error = est.ate_mean - ate_true;
  m.ate_cover = (est.ate_lo <= ate_true && ate_true <= est.ate_hi) ? 1.0 : 0.0;
  m.ate_il = est.ate_hi - est.ate_lo;
  return m;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::xbcf: return "xbcf";
    case Method::bcf_cold: return "bcf";
    case Method::ws_bcf: return "ws_bcf";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "xbcf") return Method::xbcf;
  if (name == "bcf" || name == "bcf_cold") return Method::bcf_cold;
  if (name == "ws_bcf" || name == "ws-bcf" || name == "wsbcf") return Method::ws_bcf;
  throw ValidationError("unknown method '" + name + "'");
}

Prognostic prognostic_from_string(const std::string& name) {
  if (name == "linear") return Prognostic::linear;
  if (name == "nonlinear") return Prognostic::nonlinear;
  throw ValidationError("unknown prognostic kind '" + name + "'");
}

Treatment treatment_from_string(const std::string& name) {
  if (name == "homogeneous") return Treatment::homogeneous;
  if (name == "heterogeneous") return Treatment::heterogeneous;
  throw ValidationError("unknown treatment kind '" + name + "'");
}

std::vector<BenchmarkRow> aggregate(const std::vector<RepResult>& reps,
                                    const std::vector<DGPConfig>& configs,
                                    const std::vector<Method>& methods) {
  std::vector<BenchmarkRow> rows;
  for (const DGPConfig& c : configs) {
    const std::string label = c.label();
    for (Method m : methods) {
      BenchmarkRow row{label, m};
      double ate_se = 0.0;
      for (const RepResult& r : reps) {
        if (r.config != label || r.method != m) continue;
        if (!r.ok) {
          ++row.reps_failed;
          continue;
        }
        ++row.reps_ok;
        ate_se += r.metrics.ate_error * r.metrics.ate_error;
        row.cate_rmse += r.metrics.cate_rmse;
        row.ate_cover += r.metrics.ate_cover;
        row.cate_cover += r.metrics.cate_cover;
        row.ate_il += r.metrics.ate_il;
        row.cate_il += r.metrics.cate_il;
        row.seconds += r.seconds;
      }
      if (row.reps_ok > 0) {
        const double k = row.reps_ok;
        row.ate_rmse = std::sqrt(ate_se / k);
        row.cate_rmse /= k;
        row.ate_cover /= k;
        row.cate_cover /= k;
        row.ate_il /= k;
        row.cate_il /= k;
        row.seconds /= k;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

BenchmarkResult run_benchmark(const std::vector<DGPConfig>& configs,
                              const std::vector<Method>& methods,
                              const BenchmarkOptions& options) {
  if (options.reps < 1) throw ValidationError("benchmark: reps must be >= 1");
  for (const auto& c : configs) c.validate();
  options.hp.validate();

  const std::size_t tasks = configs.size() * static_cast<std::size_t>(options.reps);
  std::vector<std::vector<RepResult>> per_task(tasks);
  const int inner_threads = options.threads > 1 ? 1 : options.threads;

  parallel_for(tasks, options.threads, [&](std::size_t task) {
    const DGPConfig& base = configs[task / static_cast<std::size_t>(options.reps)];
    const int rep = static_cast<int>(task % static_cast<std::size_t>(options.reps));
    DGPConfig config = base;
    Rng seeds = Rng::stream(base.seed, static_cast<std::uint64_t>(rep));
    config.seed = seeds.engine()();
    const std::uint64_t fit_seed = seeds.engine()();

    auto& results = per_task[task];
    std::optional<SimulatedData> sim;
    std::string setup_error;
    try {
      sim = generate(config);
      if (!options.true_propensity) {
        sim->data.pi_hat = estimate_propensity(sim->data.X, sim->data.z).pi;
      }
    } catch (const std::exception& e) {
      setup_error = e.what();
    }

    std::optional<PosteriorDraws> xbcf_fit;
    double xbcf_seconds = 0.0;
    auto run_xbcf = [&]() -> const PosteriorDraws& {
      if (!xbcf_fit) {
        Hyperparams hp = options.hp;
        hp.seed = fit_seed;
        const auto t0 = std::chrono::steady_clock::now();
        xbcf_fit = fit(sim->data, hp);
        xbcf_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      return *xbcf_fit;
    };

    for (Method m : methods) {
      RepResult r;
      r.config = base.label();
      r.method = m;
      r.rep = rep;
      if (!sim) {
        r.error = setup_error;
        results.push_back(r);
        continue;
      }
      try {
        if (m == Method::xbcf) {
          const PosteriorDraws& draws = run_xbcf();
          r.seconds = xbcf_seconds;
          r.metrics = score(summarize(draws, sim->data.X, options.level), *sim);
        } else if (m == Method::bcf_cold) {
          Hyperparams hp = options.hp;
          Rng rng(fit_seed ^ 0x5bd1e995ULL);
          const auto t0 = std::chrono::steady_clock::now();
          const PosteriorDraws draws = bcf_fit(sim->data, hp, options.cold, std::nullopt, rng);
          r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          r.metrics = score(summarize(draws, sim->data.X, options.level), *sim);
        } else {
          const PosteriorDraws& init = run_xbcf();
          const auto t0 = std::chrono::steady_clock::now();
          const PosteriorDraws draws =
              warm_start(sim->data, init,
                         WarmStartOptions{options.ws_iterations, fit_seed + 1, inner_threads, 0});
          r.seconds = xbcf_seconds +
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          r.metrics = score(summarize(draws, sim->data.X, options.level), *sim);
        }
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      results.push_back(r);
    }
  });

  BenchmarkResult out;
  for (auto& task : per_task) {
    for (auto& r : task) out.reps.push_back(std::move(r));
  }
  out.rows = aggregate(out.reps, configs, methods);
  return out;
}

}  // namespace xbcf::sim
