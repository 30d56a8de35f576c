#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "primescale/error.hpp"
#include "primescale/fbm.hpp"
#include "primescale/numeric.hpp"
#include "primescale/primes.hpp"
#include "primescale/series.hpp"
#include "primescale/stats.hpp"

namespace primescale {

// Rectangle of dyadic scales: m in [m_min, m_max], n in [0, budget - m].
struct ExperimentConfig {
  int m_min = 10;
  int m_max = 16;
  int budget = 26;
  std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t prime_count = std::size_t{1} << 26;
  std::optional<Injection> injection;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double level = 0.95;

  int n_max(int m) const noexcept { return budget - m; }

  void validate() const {
    if (m_min < 3) throw ConfigError("m_min must be >= 3");
    if (m_max < m_min) throw ConfigError("m_max must be >= m_min");
    if (budget < m_max) throw ConfigError("budget must be >= m_max so that n >= 0");
    if (budget > 62) throw ConfigError("budget must be <= 62");
    if (ks.empty()) throw ConfigError("at least one lag k is required");
    for (int k : ks)
      if (k < 1) throw ConfigError("lags must be >= 1");
    if ((std::size_t{1} << budget) > prime_count)
      throw ConfigError("budget " + std::to_string(budget) + " needs 2^" + std::to_string(budget) +
                        " primes but prime_count is " + std::to_string(prime_count));
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  }
};

struct MomentCell {
  double variance_scaled = 0.0;  // Var[Delta(m, n)] / 2^n
  double kurtosis = 0.0;
};

struct GridResult {
  std::vector<CorrelationGrid> grids;  // one per lag, in config order
  std::map<CorrelationGrid::Key, MomentCell> moments;

  const CorrelationGrid& grid(int k) const {
    for (const auto& g : grids)
      if (g.k() == k) return g;
    throw UsageError("no grid for lag k=" + std::to_string(k));
  }
};

// C_k(m, n), scaled variance and kurtosis over the configured rectangle.
inline GridResult run_grid(const BSeries& b, const ExperimentConfig& config) {
  if (config.budget >= 0 && config.budget <= 62) {
    const std::size_t need = std::size_t{1} << config.budget;
    if (b.count() < need)
      throw RangeError("grid with budget " + std::to_string(config.budget) + " needs " +
                           std::to_string(need) + " primes, series has " + std::to_string(b.count()),
                       need);
  }
  config.validate();
  std::vector<CorrelationGrid::Key> keys;
  for (int m = config.m_min; m <= config.m_max; ++m)
    for (int n = 0; n <= config.n_max(m); ++n) keys.emplace_back(m, n);

  struct CellOut {
    std::vector<double> corr;
    MomentCell moments;
  };
  std::vector<CellOut> out(keys.size());
  parallel_for(keys.size(), config.threads, [&](std::size_t c) {
    const auto [m, n] = keys[c];
    const auto delta = delta_sequence(b, m, n);
    auto& cell = out[c];
    for (int k : config.ks) cell.corr.push_back(pearson_lag(delta.entries, k));
    cell.moments.variance_scaled = variance(delta.entries) / std::ldexp(1.0, n);
    cell.moments.kurtosis = kurtosis(delta.entries);
  });

  GridResult result;
  for (int k : config.ks) result.grids.emplace_back(k);
  for (std::size_t c = 0; c < keys.size(); ++c) {
    for (std::size_t g = 0; g < config.ks.size(); ++g)
      result.grids[g].set(keys[c].first, keys[c].second, out[c].corr[g]);
    result.moments[keys[c]] = out[c].moments;
  }
  return result;
}

// Hurst exponent implied by Var[Delta(m, n)] / 2^n ~ sigma^2 2^((2H-1) n):
// the OLS slope of log2 of the scaled variance against n equals 2H - 1.
struct VarianceHurst {
  double hurst = 0.0;
  FitResult fit;
};

inline VarianceHurst variance_implied_hurst(const GridResult& grid, int m, int n_min = 0) {
  std::vector<Point> pts;
  for (const auto& [key, cell] : grid.moments)
    if (key.first == m && key.second >= n_min)
      pts.push_back({static_cast<double>(key.second), std::log2(cell.variance_scaled)});
  const auto fit = ols_slope_ci(pts);
  return {0.5 * (1.0 + fit.slope), fit};
}

// Random-walk surrogate: b(1) = 0 and i.i.d. Exp(1) - 1 increments.
inline BSeries surrogate_series(std::size_t count, std::uint64_t seed) {
  if (count < 1) throw UsageError("surrogate needs at least one value");
  std::mt19937_64 engine(seed);
  std::vector<double> values(count);
  CompensatedSum acc;
  for (std::size_t i = 1; i < count; ++i) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    acc.add(-std::log1p(-u) - 1.0);
    values[i] = acc.value();
  }
  return BSeries(std::move(values), {count, 0});
}

struct FlaggedCell {
  int m = 0;
  int n = 0;
  double baseline = 0.0;
  double injected = 0.0;
};

struct BifurcationReport {
  std::vector<FlaggedCell> flagged;
  std::optional<int> m_star;             // smallest flagged m
  std::optional<double> log2T_minus_m;   // when the injection height is known

  // Smallest flagged n, optionally restricted to one m.
  std::optional<int> first_flagged_n(std::optional<int> m = std::nullopt) const {
    std::optional<int> best;
    for (const auto& f : flagged)
      if (!m || f.m == *m)
        if (!best || f.n < *best) best = f.n;
    return best;
  }
};

inline double bifurcation_threshold(int m) { return 5.0 / std::sqrt(std::ldexp(1.0, m)); }

inline BifurcationReport detect_bifurcation(const CorrelationGrid& baseline,
                                            const CorrelationGrid& injected,
                                            std::optional<double> injection_T = std::nullopt) {
  if (!baseline.same_support(injected))
    throw UsageError("baseline and injected grids cover different (m, n, k) cells");
  BifurcationReport report;
  for (const auto& [key, base] : baseline.cells()) {
    const double inj = injected.at(key.first, key.second);
    if (std::abs(inj - base) > bifurcation_threshold(key.first))
      report.flagged.push_back({key.first, key.second, base, inj});
  }
  for (const auto& f : report.flagged)
    if (!report.m_star || f.m < *report.m_star) report.m_star = f.m;
  if (report.m_star && injection_T) report.log2T_minus_m = std::log2(*injection_T) - *report.m_star;
  return report;
}

// Reach of the scale-invariance test against an off-line zero at distance d.
// Detection needs n ~ 1/d^2 dyadic scales, so the largest index sampled is
// about 2^(1/d^2) T.
struct Sensitivity {
  double d = 0.0;
  double n_needed = 0.0;      // 1/d^2
  double log2_T_max = 0.0;    // log2(max_index) - 1/d^2, always finite
  double T_max = 0.0;         // 0 when out of reach
  bool reachable = true;      // false if 2^(1/d^2) overflows a double
};

inline Sensitivity sensitivity(double d, double max_index) {
  if (!(d > 0.0 && d <= 0.5)) throw DomainError("sensitivity: d must lie in (0, 1/2]");
  if (!(max_index > 0.0)) throw DomainError("sensitivity: max_index must be positive");
  Sensitivity s;
  s.d = d;
  s.n_needed = 1.0 / (d * d);
  s.log2_T_max = std::log2(max_index) - s.n_needed;
  const double scale = std::exp2(s.n_needed);
  if (!std::isfinite(scale)) {
    s.reachable = false;
    return s;
  }
  s.T_max = max_index / scale;
  return s;
}

// Primes needed to see a zero at height T: n 2^m ~ T / d^2.
inline double primes_needed(double T, double d) {
  if (!(d > 0.0 && d <= 0.5)) throw DomainError("primes_needed: d must lie in (0, 1/2]");
  return T / (d * d);
}

// ---------------------------------------------------------------------------
// Plot-ready correlation curves

struct Fig5Row {
  double hurst;
  int k;
  double type1;
  double type2_origin;
};

inline std::vector<Fig5Row> fig5_rows(const std::vector<double>& hursts, const std::vector<int>& ks) {
  std::vector<Fig5Row> rows;
  for (double h : hursts)
    for (int k : ks) rows.push_back({h, k, corr_type1(h, k, 1), corr_type2(h, k, 1, 0)});
  return rows;
}

inline std::vector<double> default_fig5_hursts() {
  std::vector<double> hs;
  for (int i = 1; i <= 49; ++i) hs.push_back(0.02 * i);
  return hs;
}

struct Fig6Row {
  int m;
  int k;
  double measured;   // C_k(m)
  double band_lo;    // corr_type2(H, k, 1, 0)
  double band_hi;    // corr_type1(H, k, 1)
};

inline std::vector<Fig6Row> fig6_rows(const GridResult& grid, double hurst, const std::vector<int>& ms) {
  check_hurst(hurst);
  std::vector<Fig6Row> rows;
  for (int m : ms)
    for (const auto& g : grid.grids)
      rows.push_back({m, g.k(), g.summarize(m).aggregate.mean, corr_type2(hurst, g.k(), 1, 0),
                      corr_type1(hurst, g.k(), 1)});
  return rows;
}

// ---------------------------------------------------------------------------
// Explicit formula check

struct ExplicitPoint {
  std::size_t zeros = 0;
  double rms = 0.0;
};

struct ExplicitTrend {
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t primes = 0;
  std::vector<ExplicitPoint> points;  // ascending zero counts

  bool non_increasing() const {
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].rms > points[i - 1].rms) return false;
    return true;
  }
};

// RMS over primes in [lo, hi] of normalized b minus the explicit formula
// truncated to each requested number of zeros.
inline ExplicitTrend explicit_check(const BSeries& b, const PrimeCache& cache, const ZetaZeros& zeros,
                                    double lo, double hi, std::vector<std::size_t> counts,
                                    unsigned threads = 1) {
  if (!(lo >= 2.0 && hi > lo)) throw UsageError("explicit_check needs 2 <= lo < hi");
  if (cache.count() != b.count()) throw UsageError("prime cache and series lengths differ");
  if (cache.empty() || static_cast<double>(cache.back()) < hi)
    throw RangeError("prime cache does not reach the window end", 0);
  std::sort(counts.begin(), counts.end());
  if (counts.empty()) throw UsageError("explicit_check needs at least one zero count");
  if (counts.back() > zeros.size())
    throw RangeError("zero table holds " + std::to_string(zeros.size()) + " ordinates, " +
                         std::to_string(counts.back()) + " requested",
                     counts.back());
  const auto first = cache.pi(static_cast<std::uint64_t>(std::ceil(lo)) - 1);
  const auto last = cache.pi(static_cast<std::uint64_t>(std::floor(hi)));
  const std::size_t len = last - first;
  if (len == 0) throw RangeError("no primes in the explicit-formula window", 1);

  // residual[c * len + idx] for count index c.
  std::vector<double> residual(counts.size() * len);
  parallel_for(len, threads, [&](std::size_t idx) {
    const std::size_t i = first + idx;  // 0-based prime index
    const double p = static_cast<double>(cache[i]);
    const double lp = std::log(p);
    const double lhs = normalized_b(b.values()[i], p);
    CompensatedSum sum;
    std::size_t z = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      for (; z < counts[c]; ++z) sum.add(std::sin(zeros.gammas[z] * lp) / zeros.gammas[z]);
      residual[c * len + idx] = lhs - (1.0 + 2.0 * sum.value());
    }
  });

  ExplicitTrend trend{lo, hi, len, {}};
  for (std::size_t c = 0; c < counts.size(); ++c) {
    CompensatedSum ss;
    for (std::size_t idx = 0; idx < len; ++idx) ss.add(residual[c * len + idx] * residual[c * len + idx]);
    trend.points.push_back({counts[c], std::sqrt(ss.value() / static_cast<double>(len))});
  }
  return trend;
}

// ---------------------------------------------------------------------------
// CSV emission. Reals use 12 significant digits so reruns are byte-identical.

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_grid_csv(std::ostream& os, const GridResult& r) {
  os << "m,n,k,value\n";
  for (const auto& g : r.grids)
    for (const auto& [key, v] : g.cells())
      os << key.first << ',' << key.second << ',' << g.k() << ',' << fmt_real(v) << '\n';
}

inline void write_variance_csv(std::ostream& os, const GridResult& r) {
  os << "m,n,value\n";
  for (const auto& [key, cell] : r.moments)
    os << key.first << ',' << key.second << ',' << fmt_real(cell.variance_scaled) << '\n';
}

inline void write_kurtosis_csv(std::ostream& os, const GridResult& r) {
  os << "m,n,value\n";
  for (const auto& [key, cell] : r.moments)
    os << key.first << ',' << key.second << ',' << fmt_real(cell.kurtosis) << '\n';
}

inline void write_summary_csv(std::ostream& os, const GridResult& r, double level = 0.95) {
  os << "m,k,mean,std,slope,ci_lo,ci_hi\n";
  for (const auto& g : r.grids) {
    for (int m : g.ms()) {
      const auto s = g.summarize(m, level);
      os << m << ',' << g.k() << ',' << fmt_real(s.aggregate.mean) << ',' << fmt_real(s.aggregate.std);
      if (s.slope)
        os << ',' << fmt_real(s.slope->slope) << ',' << fmt_real(s.slope->ci_lo) << ','
           << fmt_real(s.slope->ci_hi);
      else
        os << ",,,";
      os << '\n';
    }
  }
}

inline void write_bifurcation_csv(std::ostream& os, const BifurcationReport& r) {
  os << "m,n,baseline,injected,threshold\n";
  for (const auto& f : r.flagged)
    os << f.m << ',' << f.n << ',' << fmt_real(f.baseline) << ',' << fmt_real(f.injected) << ','
       << fmt_real(bifurcation_threshold(f.m)) << '\n';
}

inline void write_fig5_csv(std::ostream& os, const std::vector<Fig5Row>& rows) {
  os << "H,k,type1,type2_i0\n";
  for (const auto& r : rows)
    os << fmt_real(r.hurst) << ',' << r.k << ',' << fmt_real(r.type1) << ',' << fmt_real(r.type2_origin)
       << '\n';
}

inline void write_fig6_csv(std::ostream& os, const std::vector<Fig6Row>& rows) {
  os << "m,k,measured,band_lo,band_hi\n";
  for (const auto& r : rows)
    os << r.m << ',' << r.k << ',' << fmt_real(r.measured) << ',' << fmt_real(r.band_lo) << ','
       << fmt_real(r.band_hi) << '\n';
}

inline void write_ensemble_csv(std::ostream& os, const Ensemble& ens,
                               const std::vector<EnsembleStatistic>& stats) {
  os << "H,N,P,seed,statistic,value,stderr\n";
  for (const auto& s : stats)
    os << fmt_real(ens.hurst) << ',' << ens.length << ',' << ens.paths << ',' << ens.seed << ','
       << s.name << ',' << fmt_real(s.value) << ',' << fmt_real(s.std_error) << '\n';
}

inline void write_explicit_csv(std::ostream& os, const ExplicitTrend& t) {
  os << "zeros,rms\n";
  for (const auto& p : t.points) os << p.zeros << ',' << fmt_real(p.rms) << '\n';
}

}  // namespace primescale
