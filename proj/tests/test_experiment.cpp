#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "primescale/experiment.hpp"

namespace ps = primescale;

namespace {

const ps::PrimeCache& cache20() {
  static const auto c = ps::first_n_primes(std::size_t{1} << 20);
  return c;
}

const ps::BSeries& series20() {
  static const auto b = ps::build_b_series(cache20());
  return b;
}

ps::ExperimentConfig small_config(int budget = 20) {
  ps::ExperimentConfig cfg;
  cfg.m_min = 8;
  cfg.m_max = 12;
  cfg.budget = budget;
  cfg.ks = {1, 2, 3};
  cfg.prime_count = std::size_t{1} << budget;
  return cfg;
}

std::string grid_bytes(const ps::GridResult& r) {
  std::ostringstream os;
  ps::write_grid_csv(os, r);
  ps::write_variance_csv(os, r);
  ps::write_kurtosis_csv(os, r);
  ps::write_summary_csv(os, r);
  return os.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(ExperimentConfig, DefaultsAreDeskScale) {
  ps::ExperimentConfig cfg;
  EXPECT_EQ(cfg.m_min, 10);
  EXPECT_EQ(cfg.m_max, 16);
  EXPECT_EQ(cfg.budget, 26);
  EXPECT_EQ(cfg.prime_count, std::size_t{1} << 26);
  EXPECT_EQ(cfg.ks.size(), 8u);
  EXPECT_EQ(cfg.n_max(10), 16);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfig, Validation) {
  auto bad = [](auto mutate) {
    auto cfg = small_config();
    mutate(cfg);
    EXPECT_THROW(cfg.validate(), ps::ConfigError);
  };
  bad([](auto& c) { c.m_min = 2; });
  bad([](auto& c) { c.m_max = 7; });
  bad([](auto& c) { c.budget = 11; });
  bad([](auto& c) { c.ks = {}; });
  bad([](auto& c) { c.ks = {1, 0}; });
  bad([](auto& c) { c.prime_count = (std::size_t{1} << 20) - 1; });
  bad([](auto& c) { c.level = 1.0; });
}

TEST(RunGrid, ShapeAndRanges) {
  const auto cfg = small_config();
  const auto r = ps::run_grid(series20(), cfg);
  ASSERT_EQ(r.grids.size(), 3u);
  std::size_t cells = 0;
  for (int m = 8; m <= 12; ++m) cells += static_cast<std::size_t>(20 - m + 1);
  EXPECT_EQ(r.moments.size(), cells);
  for (const auto& g : r.grids) {
    EXPECT_EQ(g.cells().size(), cells);
    for (const auto& [key, v] : g.cells()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const auto d = ps::delta_sequence(series20(), 9, 4);
  EXPECT_EQ(r.grid(2).at(9, 4), ps::pearson_lag(d.entries, 2));
  EXPECT_EQ(r.moments.at({9, 4}).kurtosis, ps::kurtosis(d.entries));
  EXPECT_THROW(r.grid(4), ps::UsageError);
  // prime correlations at these scales are negative
  for (int m = 8; m <= 12; ++m) EXPECT_LT(r.grid(1).summarize(m).aggregate.mean, 0.0) << m;
}

TEST(RunGrid, DeterministicAcrossThreads) {
  auto cfg = small_config();
  const auto a = grid_bytes(ps::run_grid(series20(), cfg));
  cfg.threads = 3;
  const auto b = grid_bytes(ps::run_grid(series20(), cfg));
  EXPECT_EQ(a, b);
}

TEST(RunGrid, PrefixRunIsSubGrid) {
  const auto full = ps::run_grid(series20(), small_config(20));
  const auto pre_b = ps::build_b_series(cache20().prefix(std::size_t{1} << 17));
  const auto part = ps::run_grid(pre_b, small_config(17));
  for (std::size_t g = 0; g < part.grids.size(); ++g)
    for (const auto& [key, v] : part.grids[g].cells()) EXPECT_EQ(full.grids[g].at(key.first, key.second), v);
  for (const auto& [key, cell] : part.moments) EXPECT_EQ(full.moments.at(key).variance_scaled, cell.variance_scaled);
}

TEST(RunGrid, InsufficientPrimesNamesRequiredCount) {
  const auto b = ps::build_b_series(cache20().prefix(1000));
  try {
    ps::run_grid(b, small_config());
    FAIL();
  } catch (const ps::RangeError& e) {
    EXPECT_EQ(e.required(), std::size_t{1} << 20);
  }
}

TEST(CsvOutput, HeadersAndRowCounts) {
  const auto r = ps::run_grid(series20(), small_config());
  std::ostringstream g, v, k, s;
  ps::write_grid_csv(g, r);
  ps::write_variance_csv(v, r);
  ps::write_kurtosis_csv(k, r);
  ps::write_summary_csv(s, r);
  EXPECT_EQ(first_line(g.str()), "m,n,k,value");
  EXPECT_EQ(first_line(v.str()), "m,n,value");
  EXPECT_EQ(first_line(k.str()), "m,n,value");
  EXPECT_EQ(first_line(s.str()), "m,k,mean,std,slope,ci_lo,ci_hi");
  auto lines = [](const std::string& t) { return std::count(t.begin(), t.end(), '\n'); };
  EXPECT_EQ(lines(g.str()), 1 + 3 * static_cast<long>(r.moments.size()));
  EXPECT_EQ(lines(s.str()), 1 + 3 * 5);
  EXPECT_EQ(ps::fmt_real(-0.1), "-0.1");
  EXPECT_EQ(ps::fmt_real(1.0 / 3.0), "0.333333333333");
}

TEST(VarianceHurst, RandomWalkIsHalf) {
  const auto b = ps::surrogate_series(std::size_t{1} << 20, 9);
  const auto r = ps::run_grid(b, small_config());
  for (int m = 8; m <= 12; ++m) EXPECT_NEAR(ps::variance_implied_hurst(r, m).hurst, 0.5, 0.03) << m;
}

TEST(Surrogate, NullCorrelationsAndFlatVariance) {
  const auto b = ps::surrogate_series(std::size_t{1} << 20, 2);
  EXPECT_EQ(b(1), 0.0);
  EXPECT_EQ(b.count(), std::size_t{1} << 20);
  const auto r = ps::run_grid(b, small_config());
  for (int m = 8; m <= 12; ++m) {
    EXPECT_LT(std::abs(r.grid(1).summarize(m).aggregate.mean), 3 / std::sqrt(std::ldexp(1.0, m))) << m;
    for (int n = 0; n <= 20 - m; ++n) {
      // Exp(1) - 1 steps have unit variance; sampling error ~ sqrt(8 / 2^m) for kurtosis 9 at n = 0
      EXPECT_NEAR(r.moments.at({m, n}).variance_scaled, 1.0, 5 * std::sqrt(8.0 / std::ldexp(1.0, m))) << m << "," << n;
    }
  }
  EXPECT_EQ(ps::surrogate_series(1000, 2).values()[999], ps::surrogate_series(1000, 2).values()[999]);
  EXPECT_NE(ps::surrogate_series(1000, 2).values()[999], ps::surrogate_series(1000, 3).values()[999]);
}

TEST(Bifurcation, IdenticalGridsUnflagged) {
  const auto r = ps::run_grid(series20(), small_config());
  const auto rep = ps::detect_bifurcation(r.grid(1), r.grid(1), 20000.0);
  EXPECT_TRUE(rep.flagged.empty());
  EXPECT_FALSE(rep.m_star.has_value());
  EXPECT_FALSE(rep.log2T_minus_m.has_value());
}

TEST(Bifurcation, ThresholdAndReport) {
  EXPECT_DOUBLE_EQ(ps::bifurcation_threshold(16), 5.0 / 256.0);
  ps::CorrelationGrid base(1), inj(1);
  for (int m = 10; m <= 12; ++m)
    for (int n = 0; n < 4; ++n) {
      base.set(m, n, -0.1);
      inj.set(m, n, -0.1);
    }
  inj.set(11, 3, -0.1 + 1.01 * ps::bifurcation_threshold(11));
  inj.set(12, 1, -0.1 - 1.01 * ps::bifurcation_threshold(12));
  inj.set(10, 0, -0.1 + 0.99 * ps::bifurcation_threshold(10));
  const auto rep = ps::detect_bifurcation(base, inj, 4096.0);
  ASSERT_EQ(rep.flagged.size(), 2u);
  EXPECT_EQ(*rep.m_star, 11);
  EXPECT_DOUBLE_EQ(*rep.log2T_minus_m, 1.0);
  EXPECT_EQ(*rep.first_flagged_n(), 1);
  EXPECT_EQ(*rep.first_flagged_n(11), 3);
  EXPECT_FALSE(rep.first_flagged_n(10).has_value());
  std::ostringstream os;
  ps::write_bifurcation_csv(os, rep);
  EXPECT_EQ(first_line(os.str()), "m,n,baseline,injected,threshold");
}

TEST(Bifurcation, MismatchedSupport) {
  ps::CorrelationGrid a(1), b(1), c(2);
  a.set(10, 0, 0.0);
  a.set(10, 1, 0.0);
  b.set(10, 0, 0.0);
  c.set(10, 0, 0.0);
  c.set(10, 1, 0.0);
  EXPECT_THROW(ps::detect_bifurcation(a, b), ps::UsageError);
  EXPECT_THROW(ps::detect_bifurcation(a, c), ps::UsageError);
}

TEST(Sensitivity, Examples) {
  const auto s = ps::sensitivity(0.25, 1e22);
  EXPECT_EQ(s.n_needed, 16.0);
  EXPECT_DOUBLE_EQ(s.T_max, 1e22 / 65536.0);
  EXPECT_GE(s.T_max, 1e17);
  EXPECT_LE(s.T_max, 2e17);
  const auto h = ps::sensitivity(0.5, 1e9);
  EXPECT_EQ(h.n_needed, 4.0);
  EXPECT_EQ(h.T_max, 1e9 / 16);
  EXPECT_EQ(ps::primes_needed(1e17, 0.25), 1.6e18);
  EXPECT_THROW(ps::sensitivity(0.0, 1e22), ps::DomainError);
  EXPECT_THROW(ps::sensitivity(0.25, 0.0), ps::DomainError);
  EXPECT_THROW(ps::primes_needed(1e17, 0.7), ps::DomainError);
}

TEST(Sensitivity, TinyDistanceOutOfReach) {
  const auto s = ps::sensitivity(0.01, 1e22);
  EXPECT_FALSE(s.reachable);
  EXPECT_EQ(s.n_needed, 1.0 / (0.01 * 0.01));
  EXPECT_NEAR(s.log2_T_max, std::log2(1e22) - 10000.0, 1e-9);
}

TEST(Figures, Fig5BandOrdering) {
  const auto rows = ps::fig5_rows(ps::default_fig5_hursts(), {1, 2});
  EXPECT_EQ(rows.size(), 98u);
  for (const auto& r : rows) {
    if (std::abs(r.hurst - 0.5) < 1e-12) {
      EXPECT_NEAR(r.type1, 0.0, 1e-15);
    }
    if (r.hurst < 0.5) {
      EXPECT_LE(r.type2_origin, r.type1);
      EXPECT_LT(r.type1, 0.0);
    }
  }
  for (int k = 1; k <= 8; ++k) {
    EXPECT_LE(ps::corr_type2(0.4, k, 1, 0), ps::corr_type1(0.4, k, 1));
    EXPECT_LE(ps::corr_type1(0.4, k, 1), 0.0);
  }
  std::ostringstream os;
  ps::write_fig5_csv(os, rows);
  EXPECT_EQ(first_line(os.str()), "H,k,type1,type2_i0");
}

TEST(Figures, Fig6Rows) {
  const auto r = ps::run_grid(series20(), small_config());
  const auto rows = ps::fig6_rows(r, 0.4, {8, 12});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].m, 8);
  EXPECT_EQ(rows[0].k, 1);
  EXPECT_EQ(rows[0].measured, r.grid(1).summarize(8).aggregate.mean);
  EXPECT_EQ(rows[0].band_lo, ps::corr_type2(0.4, 1, 1, 0));
  EXPECT_EQ(rows[0].band_hi, ps::corr_type1(0.4, 1, 1));
  std::ostringstream os;
  ps::write_fig6_csv(os, rows);
  EXPECT_EQ(first_line(os.str()), "m,k,measured,band_lo,band_hi");
  EXPECT_THROW(ps::fig6_rows(r, 1.0, {8}), ps::DomainError);
}

class ExplicitCheck : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    zeros_ = new ps::ZetaZeros(ps::load_zeta_zeros(std::filesystem::path(PRIMESCALE_TEST_DATA) / "zeta_zeros_10k.txt"));
  }
  static void TearDownTestSuite() { delete zeros_; }
  static ps::ZetaZeros* zeros_;
};
ps::ZetaZeros* ExplicitCheck::zeros_ = nullptr;

TEST_F(ExplicitCheck, ZeroCountZeroIsPlainResidual) {
  const auto t = ps::explicit_check(series20(), cache20(), *zeros_, 1e4, 1e5, {0});
  ps::CompensatedSum ss;
  std::size_t n = 0;
  for (std::size_t i = 1; i <= cache20().count(); ++i) {
    const double p = static_cast<double>(cache20().prime(i));
    if (p < 1e4 || p > 1e5) continue;
    const double r = ps::normalized_b(series20()(i), p) - 1.0;
    ss.add(r * r);
    ++n;
  }
  EXPECT_EQ(t.primes, n);
  EXPECT_EQ(t.primes, 9592u - 1229u);
  EXPECT_NEAR(t.points[0].rms, std::sqrt(ss.value() / n), 1e-14);
}

TEST_F(ExplicitCheck, TrendStableUnderWindowDoubling) {
  const std::vector<std::size_t> counts{10, 100, 1000};
  const auto a = ps::explicit_check(series20(), cache20(), *zeros_, 1e4, 1e5, counts, 2);
  const auto b = ps::explicit_check(series20(), cache20(), *zeros_, 1e4, 2e5, counts, 2);
  EXPECT_TRUE(a.non_increasing());
  EXPECT_TRUE(b.non_increasing());
  std::ostringstream os;
  ps::write_explicit_csv(os, a);
  EXPECT_EQ(os.str().substr(0, 10), "zeros,rms\n");
}

TEST_F(ExplicitCheck, ThreadIndependent) {
  const auto a = ps::explicit_check(series20(), cache20(), *zeros_, 2e4, 5e4, {50, 500}, 1);
  const auto b = ps::explicit_check(series20(), cache20(), *zeros_, 2e4, 5e4, {500, 50}, 3);
  ASSERT_EQ(a.points.size(), 2u);
  EXPECT_EQ(b.points[0].zeros, 50u);
  EXPECT_EQ(a.points[0].rms, b.points[0].rms);
  EXPECT_EQ(a.points[1].rms, b.points[1].rms);
}

TEST_F(ExplicitCheck, Preconditions) {
  EXPECT_THROW(ps::explicit_check(series20(), cache20(), *zeros_, 1e4, 1e5, {20000}), ps::RangeError);
  EXPECT_THROW(ps::explicit_check(series20(), cache20(), *zeros_, 1e4, 1e9, {10}), ps::RangeError);
  EXPECT_THROW(ps::explicit_check(series20(), cache20(), *zeros_, 1e5, 1e4, {10}), ps::UsageError);
  EXPECT_THROW(ps::explicit_check(series20(), cache20().prefix(10), *zeros_, 1e4, 1e5, {10}), ps::UsageError);
}

// Desk-scale injection runs: smaller d pushes the departure from scale
// invariance to larger n.
TEST(InjectionScan, SmallerDistanceMovesFlagsToLargerN) {
  const auto cache = ps::first_n_primes(std::size_t{1} << 26);
  const auto b = ps::build_b_series(cache);
  ps::ExperimentConfig cfg;
  cfg.ks = {1};
  const auto base = ps::run_grid(b, cfg);
  std::vector<std::optional<int>> first;
  for (double d : {0.45, 0.35, 0.25, 0.15}) {
    const auto inj = ps::run_grid(ps::inject_quartet(b, cache, d, 20000.0), cfg);
    first.push_back(ps::detect_bifurcation(base.grid(1), inj.grid(1), 20000.0).first_flagged_n());
  }
  constexpr int none = 1000;
  for (std::size_t i = 1; i < first.size(); ++i) EXPECT_GE(first[i].value_or(none), first[i - 1].value_or(none)) << i;
  EXPECT_GT(first[3].value_or(none), first[2].value_or(none));
  EXPECT_GT(first[2].value_or(none), first[0].value_or(none));
}
