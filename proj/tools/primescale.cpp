// primescale: batch driver for the prime-series correlation experiments.
//
// Every subcommand writes CSV into --out-dir and a short report on stdout.
// Exit codes: 0 success, 2 usage/config, 3 data/parse, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "primescale/primescale.hpp"

namespace fs = std::filesystem;
using namespace primescale;

namespace {

struct Common {
  std::string out_dir = ".";
  unsigned threads = 0;
  std::uint64_t seed = 1;
};

struct SeriesSource {
  std::string bseries;
  std::string cache;
  std::size_t count = std::size_t{1} << 26;
  bool surrogate = false;
};

struct GridOptions {
  int m_min = 10;
  int m_max = 16;
  int budget = 26;
  std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8};
};

void add_source_options(CLI::App* app, SeriesSource& src) {
  app->add_option("--bseries", src.bseries, "b-series file (BSER format)");
  app->add_option("--cache", src.cache, "prime cache file (PRIM format)");
  app->add_option("--count", src.count, "number of primes to sieve when no file is given");
}

void add_grid_options(CLI::App* app, GridOptions& g) {
  app->add_option("--m-min", g.m_min, "smallest sample exponent m");
  app->add_option("--m-max", g.m_max, "largest sample exponent m");
  app->add_option("--budget", g.budget, "scale budget B; n runs over 0..B-m");
  app->add_option("--k", g.ks, "lags")->delimiter(',');
}

fs::path out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

std::ofstream open_csv(const Common& c, const std::string& name) {
  const auto path = out_path(c, name);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot write " + path.string());
  return os;
}

// Reads the cache if present; otherwise sieves and, when a path was named,
// stores the result there for later runs.
PrimeCache obtain_cache(const SeriesSource& src, const Common& c) {
  if (!src.cache.empty() && fs::exists(src.cache)) return read_cache(src.cache);
  SieveConfig sc;
  sc.threads = c.threads;
  auto cache = first_n_primes(src.count, sc);
  if (!src.cache.empty()) write_cache(cache, src.cache);
  return cache;
}

BSeries obtain_series(const SeriesSource& src, const Common& c) {
  if (src.surrogate) return surrogate_series(src.count, c.seed);
  if (!src.bseries.empty()) return read_bseries(src.bseries);
  return build_b_series(obtain_cache(src, c));
}

ExperimentConfig make_config(const GridOptions& g, const Common& c, std::size_t count) {
  ExperimentConfig cfg;
  cfg.m_min = g.m_min;
  cfg.m_max = g.m_max;
  cfg.budget = g.budget;
  cfg.ks = g.ks;
  cfg.prime_count = count;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

void print_summary(const GridResult& r) {
  std::printf("%3s %2s %12s %10s %10s %12s %12s %8s\n", "m", "k", "mean", "std", "1/sqrt2^m",
              "slope_lo", "slope_hi", "H(C1)");
  for (const auto& g : r.grids) {
    for (int m : g.ms()) {
      const auto s = g.summarize(m);
      const double ref = 1.0 / std::sqrt(std::ldexp(1.0, m));
      std::printf("%3d %2d %12.6f %10.6f %10.6f", m, g.k(), s.aggregate.mean, s.aggregate.std, ref);
      if (s.slope)
        std::printf(" %12.6g %12.6g", s.slope->ci_lo, s.slope->ci_hi);
      else
        std::printf(" %12s %12s", "-", "-");
      if (g.k() == 1 && s.aggregate.mean > -0.5 && s.aggregate.mean < 1.0)
        std::printf(" %8.4f", implied_h_from_c1(s.aggregate.mean));
      std::printf("\n");
    }
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Scale-invariant correlations in the prime series b(i) = Li(p_i) - i"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--out-dir", common.out_dir, "directory for output files");
  app.add_option("--threads", common.threads, "worker threads (0 = hardware concurrency)");
  app.add_option("--seed", common.seed, "random seed");

  // primes
  auto* primes_cmd = app.add_subcommand("primes", "sieve the first N primes into a cache file");
  std::size_t prime_count = std::size_t{1} << 26;
  std::string cache_out;
  std::size_t segment_budget = std::size_t{1} << 20;
  primes_cmd->add_option("--count", prime_count, "number of primes");
  primes_cmd->add_option("--cache", cache_out, "output cache path (default <out-dir>/primes.bin)");
  primes_cmd->add_option("--segment-budget", segment_budget, "odd-number flags per sieve segment");

  // bseries
  auto* bseries_cmd = app.add_subcommand("bseries", "build b(i) = Li(p_i) - i");
  SeriesSource bsrc;
  std::string bseries_out;
  bseries_cmd->add_option("--cache", bsrc.cache, "prime cache file");
  bseries_cmd->add_option("--count", bsrc.count, "number of primes to sieve when no cache is given");
  bseries_cmd->add_option("--output", bseries_out, "output path (default <out-dir>/bseries.bin)");

  // inject
  auto* inject_cmd = app.add_subcommand("inject", "add an off-line zero quartet to a b-series");
  SeriesSource isrc;
  double inj_d = 0.25, inj_T = 20000.0;
  std::string inject_out;
  add_source_options(inject_cmd, isrc);
  inject_cmd->add_option("--d", inj_d, "distance from the critical line");
  inject_cmd->add_option("--T", inj_T, "height of the zero");
  inject_cmd->add_option("--output", inject_out, "output path (default <out-dir>/bseries_injected.bin)");

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "correlation, variance and kurtosis grids");
  SeriesSource gsrc;
  GridOptions gopt;
  add_source_options(grid_cmd, gsrc);
  add_grid_options(grid_cmd, gopt);
  grid_cmd->add_flag("--surrogate", gsrc.surrogate, "use a seeded shifted-exponential random walk");

  // bifurcate
  auto* bif_cmd = app.add_subcommand("bifurcate", "compare baseline and injected correlation grids");
  SeriesSource bfsrc;
  GridOptions bfopt;
  bfopt.ks = {1};
  std::string injected_path;
  double bf_d = 0.25, bf_T = 20000.0;
  add_source_options(bif_cmd, bfsrc);
  add_grid_options(bif_cmd, bfopt);
  bif_cmd->add_option("--injected", injected_path, "injected b-series file (else injected on the fly)");
  bif_cmd->add_option("--d", bf_d, "injection distance when injecting on the fly");
  bif_cmd->add_option("--T", bf_T, "injection height when injecting on the fly");

  // fbm-corr
  auto* corr_cmd = app.add_subcommand("fbm-corr", "analytic fBm increment correlations");
  double fc_h = 0.4;
  int fc_type = 2;
  std::vector<std::int64_t> fc_k = {1};
  std::int64_t fc_j = 1, fc_i = 0;
  corr_cmd->add_option("--H", fc_h, "Hurst exponent");
  corr_cmd->add_option("--type", fc_type, "1 (stationary) or 2 (Riemann-Liouville)")
      ->check(CLI::IsMember({1, 2}));
  corr_cmd->add_option("--k", fc_k, "lags")->delimiter(',');
  corr_cmd->add_option("--j", fc_j, "increment width");
  corr_cmd->add_option("--i", fc_i, "increment start (Type II only)");

  // fbm-sim
  auto* sim_cmd = app.add_subcommand("fbm-sim", "exact Type II fBm ensemble");
  double fs_h = 0.4;
  std::size_t fs_n = 1024, fs_p = 10000;
  sim_cmd->add_option("--H", fs_h, "Hurst exponent");
  sim_cmd->add_option("--N", fs_n, "path length");
  sim_cmd->add_option("--paths", fs_p, "number of paths");

  // fig5
  auto* fig5_cmd = app.add_subcommand("fig5", "Type I vs Type II correlations over an H grid");
  std::vector<int> f5_k = {1, 2};
  fig5_cmd->add_option("--k", f5_k, "lags")->delimiter(',');

  // fig6
  auto* fig6_cmd = app.add_subcommand("fig6", "measured C_k(m) against the fBm band");
  SeriesSource f6src;
  GridOptions f6opt;
  double f6_h = 0.4;
  add_source_options(fig6_cmd, f6src);
  add_grid_options(fig6_cmd, f6opt);
  fig6_cmd->add_option("--H", f6_h, "Hurst exponent of the band");

  // explicit
  auto* expl_cmd = app.add_subcommand("explicit", "explicit-formula truncation trend");
  SeriesSource esrc;
  esrc.count = 100000;
  std::string zeros_path;
  double win_lo = 1e4, win_hi = 1e6;
  std::vector<std::size_t> zero_counts = {100, 1000, 10000};
  expl_cmd->add_option("--cache", esrc.cache, "prime cache file");
  expl_cmd->add_option("--count", esrc.count, "number of primes to sieve when no cache is given");
  expl_cmd->add_option("--zeros", zeros_path, "zeta zero ordinates, one per line")->required();
  expl_cmd->add_option("--window-lo", win_lo, "smallest prime in the window");
  expl_cmd->add_option("--window-hi", win_hi, "largest prime in the window");
  expl_cmd->add_option("--counts", zero_counts, "zero counts")->delimiter(',');

  // sensitivity
  auto* sens_cmd = app.add_subcommand("sensitivity", "reach of the scale-invariance test");
  double s_d = 0.25, s_max = 1e22;
  std::optional<double> s_T;
  sens_cmd->add_option("--d", s_d, "distance from the critical line");
  sens_cmd->add_option("--max-index", s_max, "largest prime index available");
  sens_cmd->add_option("--T", s_T, "zero height for the primes-needed estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*primes_cmd) {
    SieveConfig sc;
    sc.segment_budget = segment_budget;
    sc.threads = common.threads;
    const auto cache = first_n_primes(prime_count, sc);
    const auto path = cache_out.empty() ? out_path(common, "primes.bin") : fs::path(cache_out);
    write_cache(cache, path);
    std::printf("wrote %zu primes (largest %llu) to %s\n", cache.count(),
                static_cast<unsigned long long>(cache.back()), path.string().c_str());
  } else if (*bseries_cmd) {
    const auto b = build_b_series(obtain_cache(bsrc, common));
    const auto path = bseries_out.empty() ? out_path(common, "bseries.bin") : fs::path(bseries_out);
    write_bseries(b, path);
    std::printf("wrote b(1..%zu) to %s; b(1) = %.9f, b(N) = %.6f\n", b.count(), path.string().c_str(),
                b(1), b(b.count()));
  } else if (*inject_cmd) {
    const auto cache = obtain_cache(isrc, common);
    const auto b = isrc.bseries.empty() ? build_b_series(cache) : read_bseries(isrc.bseries);
    const auto injected = inject_quartet(b, cache, inj_d, inj_T);
    const auto path = inject_out.empty() ? out_path(common, "bseries_injected.bin") : fs::path(inject_out);
    write_bseries(injected, path);
    std::printf("wrote injected series (d=%g, T=%g) to %s\n", inj_d, inj_T, path.string().c_str());
  } else if (*grid_cmd) {
    const auto b = obtain_series(gsrc, common);
    const auto result = run_grid(b, make_config(gopt, common, b.count()));
    auto os = open_csv(common, "correlations.csv");
    write_grid_csv(os, result);
    auto vs = open_csv(common, "variance.csv");
    write_variance_csv(vs, result);
    auto ks = open_csv(common, "kurtosis.csv");
    write_kurtosis_csv(ks, result);
    auto ss = open_csv(common, "summary.csv");
    write_summary_csv(ss, result);
    print_summary(result);
    const auto vh = variance_implied_hurst(result, gopt.m_max);
    std::printf("variance-implied H at m=%d: %.4f\n", gopt.m_max, vh.hurst);
  } else if (*bif_cmd) {
    const auto cache = obtain_cache(bfsrc, common);
    const auto base = bfsrc.bseries.empty() ? build_b_series(cache) : read_bseries(bfsrc.bseries);
    const auto injected =
        injected_path.empty() ? inject_quartet(base, cache, bf_d, bf_T) : read_bseries(injected_path);
    if (!injected.injection()) throw UsageError("the injected series carries no injection metadata");
    const auto cfg = make_config(bfopt, common, base.count());
    const auto g0 = run_grid(base, cfg);
    const auto g1 = run_grid(injected, cfg);
    auto os = open_csv(common, "bifurcation.csv");
    for (std::size_t gi = 0; gi < g0.grids.size(); ++gi) {
      const auto report = detect_bifurcation(g0.grids[gi], g1.grids[gi], injected.injection()->T);
      write_bifurcation_csv(os, report);
      std::printf("k=%d: %zu flagged cells", g0.grids[gi].k(), report.flagged.size());
      if (report.m_star)
        std::printf(", m* = %d, log2(T) - m* = %.3f", *report.m_star, *report.log2T_minus_m);
      std::printf("\n");
    }
  } else if (*corr_cmd) {
    FbmKernel kernel{fc_h, fc_type == 1 ? FbmKind::TypeI : FbmKind::TypeII, 1.0};
    kernel.validate();
    auto os = open_csv(common, "fbm_corr.csv");
    os << "H,type,k,j,i,value\n";
    for (auto k : fc_k) {
      const double v = kernel.corr(k, fc_j, fc_i);
      os << fmt_real(fc_h) << ',' << fc_type << ',' << k << ',' << fc_j << ',' << fc_i << ',' << fmt_real(v) << '\n';
      std::printf("C(k=%lld, j=%lld, i=%lld) = %.12g\n", static_cast<long long>(k), static_cast<long long>(fc_j),
                  static_cast<long long>(fc_i), v);
    }
  } else if (*sim_cmd) {
    const auto ens = simulate_type2(fs_h, fs_n, fs_p, common.seed, common.threads);
    std::vector<EnsembleStatistic> stats;
    stats.push_back(ensemble_increment_correlation(ens, 1, 1, 0));
    stats.push_back(ensemble_terminal_variance_ratio(ens));
    auto os = open_csv(common, "ensemble_summary.csv");
    write_ensemble_csv(os, ens, stats);
    std::printf("generator: %s\n", ens.generator.c_str());
    if (ens.jitter > 0) std::printf("diagonal jitter applied: %g\n", ens.jitter);
    for (const auto& s : stats) std::printf("%s = %.6f +- %.6f\n", s.name.c_str(), s.value, s.std_error);
    std::printf("analytic corr_type2(H,1,1,0) = %.6f\n", corr_type2(fs_h, 1, 1, 0));
  } else if (*fig5_cmd) {
    auto os = open_csv(common, "fig5.csv");
    write_fig5_csv(os, fig5_rows(default_fig5_hursts(), f5_k));
  } else if (*fig6_cmd) {
    const auto b = obtain_series(f6src, common);
    const auto result = run_grid(b, make_config(f6opt, common, b.count()));
    std::vector<int> ms;
    for (int m = f6opt.m_min; m <= f6opt.m_max; ++m) ms.push_back(m);
    auto os = open_csv(common, "fig6.csv");
    write_fig6_csv(os, fig6_rows(result, f6_h, ms));
  } else if (*expl_cmd) {
    const auto zeros = load_zeta_zeros(zeros_path);
    const auto cache = obtain_cache(esrc, common);
    const auto b = build_b_series(cache);
    const auto trend = explicit_check(b, cache, zeros, win_lo, win_hi, zero_counts, common.threads);
    auto os = open_csv(common, "explicit.csv");
    write_explicit_csv(os, trend);
    for (const auto& p : trend.points) std::printf("zeros=%zu rms=%.6f\n", p.zeros, p.rms);
    std::printf("trend over %zu primes: %s\n", trend.primes,
                trend.non_increasing() ? "non-increasing" : "NOT monotone");
  } else if (*sens_cmd) {
    const auto s = sensitivity(s_d, s_max);
    std::printf("d=%g n_needed=%g log2_T_max=%g\n", s.d, s.n_needed, s.log2_T_max);
    if (s.reachable)
      std::printf("T_max=%.6g\n", s.T_max);
    else
      std::printf("T_max out of reach: 2^%g overflows\n", s.n_needed);
    if (s_T) std::printf("primes_needed(T=%g)=%.6g\n", *s_T, primes_needed(*s_T, s_d));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    const int code = exit_code(e);
    const char* kind = code == 2 ? "usage error" : code == 3 ? "data error" : code == 4 ? "numeric error" : "error";
    std::fprintf(stderr, "%s: %s\n", kind, e.what());
    return code;
  }
}
