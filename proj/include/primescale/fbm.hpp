#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "primescale/error.hpp"
#include "primescale/numeric.hpp"
#include "primescale/specfun.hpp"

namespace primescale {

inline void check_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst exponent must lie in (0, 1)");
}

namespace detail {

// hi^e - (hi - lo)^e for 0 <= lo <= hi without cancellation when lo << hi.
inline double power_gap(double hi, double lo, double e) {
  if (lo == 0.0) return 0.0;
  if (lo == hi) return std::pow(hi, e);
  return -std::pow(hi, e) * std::expm1(e * std::log1p(-lo / hi));
}

}  // namespace detail

// Stationary-increment (Type I) covariance (|t|^2H + |s|^2H - |t-s|^2H) / 2
// for t, s >= 0.
inline double cov_type1(double hurst, double t, double s) {
  check_hurst(hurst);
  if (t < 0.0 || s < 0.0) throw DomainError("cov_type1: negative time");
  const double lo = std::min(t, s);
  const double hi = std::max(t, s);
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(lo, e) + detail::power_gap(hi, lo, e));
}

// Type I increment correlation at lag k for increments of width j.
inline double corr_type1(double hurst, std::int64_t k, std::int64_t j) {
  check_hurst(hurst);
  if (j == 0) throw DomainError("corr_type1: increment width j must be nonzero");
  const double e = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  const double jj = static_cast<double>(j);
  return (std::pow(std::abs(kk + jj), e) - 2.0 * std::pow(std::abs(kk), e) +
          std::pow(std::abs(kk - jj), e)) /
         (2.0 * std::pow(std::abs(jj), e));
}

// Riemann-Liouville (Type II) covariance E[B(t) B(s)]:
// 2H/(H+1/2) hi^(H-1/2) lo^(H+1/2) 2F1(1, 1/2-H; 3/2+H; lo/hi).
inline double cov_type2(double hurst, double t, double s) {
  check_hurst(hurst);
  if (t < 0.0 || s < 0.0) throw DomainError("cov_type2: negative time");
  const double lo = std::min(t, s);
  const double hi = std::max(t, s);
  if (lo == 0.0) return 0.0;
  if (lo == hi) return std::pow(lo, 2.0 * hurst);
  return 2.0 * hurst / (hurst + 0.5) * std::pow(hi, hurst - 0.5) * std::pow(lo, hurst + 0.5) *
         hyp2f1_row(hurst, lo / hi);
}

// Type II increment correlation between B(i+j) - B(i) and B(i+k+j) - B(i+k).
inline double corr_type2(double hurst, std::int64_t k, std::int64_t j, std::int64_t i) {
  check_hurst(hurst);
  if (j < 1) throw DomainError("corr_type2: increment width j must be >= 1");
  if (i < 0 || i + k < 0) throw DomainError("corr_type2: increments must start at t >= 0");
  const auto c = [hurst](std::int64_t a, std::int64_t b) {
    return cov_type2(hurst, static_cast<double>(a), static_cast<double>(b));
  };
  const std::int64_t i2 = i + k;
  const double num = c(i + j, i2 + j) - c(i + j, i2) - c(i, i2 + j) + c(i, i2);
  const double v1 = c(i + j, i + j) - 2.0 * c(i, i + j) + c(i, i);
  const double v2 = c(i2 + j, i2 + j) - 2.0 * c(i2, i2 + j) + c(i2, i2);
  if (!(v1 > 0.0 && v2 > 0.0)) throw DomainError("corr_type2: degenerate increment variance");
  return num / std::sqrt(v1 * v2);
}

// Inverts corr_type1(H, 1, 1) = 2^(2H-1) - 1.
inline double implied_h_from_c1(double c) {
  if (!(c > -0.5 && c < 1.0)) throw DomainError("implied_h_from_c1: c must lie in (-1/2, 1)");
  return 0.5 * (1.0 + std::log2(1.0 + c));
}

enum class FbmKind { TypeI, TypeII };

struct FbmKernel {
  double hurst = 0.5;
  FbmKind kind = FbmKind::TypeI;
  double sigma = 1.0;

  void validate() const {
    check_hurst(hurst);
    if (!(sigma > 0.0)) throw DomainError("fBm sigma must be positive");
  }
  double cov(double t, double s) const {
    const double base = kind == FbmKind::TypeI ? cov_type1(hurst, t, s) : cov_type2(hurst, t, s);
    return sigma * sigma * base;
  }
  // Increment correlation; i is ignored for Type I.
  double corr(std::int64_t k, std::int64_t j, std::int64_t i = 0) const {
    return kind == FbmKind::TypeI ? corr_type1(hurst, k, j) : corr_type2(hurst, k, j, i);
  }
};

struct LimitWeights {
  double w1 = 0.0;
  double w2 = 0.0;
};

// Weights of E[B(t) | B(i1), B(i2)] = w1 B(i1) + w2 B(i2) for Type I fBm
// observed only through its two values (the level is not pinned, so only
// the increment B(i2) - B(i1) carries information and w1 + w2 = 1).
inline LimitWeights conditional_limit_weights(double hurst, double i1, double i2, double t) {
  check_hurst(hurst);
  if (i1 == i2) throw DegenerateInputError("conditional_limit_weights: i1 == i2 gives a singular system");
  if (!(i1 > 0.0 && i1 < i2 && i2 < t))
    throw UsageError("conditional_limit_weights needs 0 < i1 < i2 < t");
  const double gap = i2 - i1;
  const double var = std::pow(gap, 2.0 * hurst);
  const double w2 = cov_type1(hurst, gap, t - i1) / var;
  return {1.0 - w2, w2};
}

// Sum of corr_type1(H, k, 1) over k = -K..K.
inline double sum_rule_partial(double hurst, std::int64_t terms) {
  if (!(hurst > 0.0 && hurst < 0.5)) throw DomainError("sum_rule_partial needs 0 < H < 1/2");
  if (terms < 1) throw UsageError("sum_rule_partial needs K >= 1");
  CompensatedSum s;
  for (std::int64_t k = -terms; k <= terms; ++k) s.add(corr_type1(hurst, k, 1));
  return s.value();
}

// ---------------------------------------------------------------------------
// Exact Type II sampling

inline constexpr std::size_t kMaxSimulationLength = 4096;
inline constexpr double kCholeskyJitter = 1e-12;
inline constexpr const char* kNormalSource =
    "mt19937_64 seeded per path with splitmix64(seed, path); Marsaglia polar normals";

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normals from mt19937_64 via the Marsaglia polar method. Unlike
// std::normal_distribution the output is identical across standard libraries.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) noexcept {
  return splitmix64(seed ^ splitmix64(path + 1));
}

struct Ensemble {
  double hurst = 0.5;
  std::size_t length = 0;  // N: samples B(1..N); B(0) = 0 is implicit
  std::size_t paths = 0;   // P
  std::uint64_t seed = 0;
  double jitter = 0.0;     // diagonal jitter added before factorization, 0 if none
  std::string generator = kNormalSource;
  std::vector<double> values;  // path-major, P x N

  std::span<const double> path(std::size_t p) const {
    return std::span<const double>(values).subspan(p * length, length);
  }
  // B(t) on path p, t in 0..N.
  double at(std::size_t p, std::size_t t) const { return t == 0 ? 0.0 : values[p * length + t - 1]; }
};

// Lower Cholesky factor of the Type II covariance at t = 1..N.
inline Eigen::MatrixXd type2_cholesky(double hurst, std::size_t length, double* jitter_out = nullptr) {
  check_hurst(hurst);
  const auto n = static_cast<Eigen::Index>(length);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b <= a; ++b)
      cov(a, b) = cov(b, a) = cov_type2(hurst, static_cast<double>(a + 1), static_cast<double>(b + 1));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  double jitter = 0.0;
  if (llt.info() != Eigen::Success) {
    jitter = kCholeskyJitter * cov.diagonal().maxCoeff();
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) {
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                 cov, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .minCoeff();
      throw FactorizationError("Type II covariance is not positive definite (minimum eigenvalue " +
                                   std::to_string(min_eig) + ")",
                               min_eig);
    }
  }
  if (jitter_out) *jitter_out = jitter;
  return llt.matrixL();
}

// Exact Gaussian sampling of Type II fBm at integer times 1..N.
inline Ensemble simulate_type2(double hurst, std::size_t length, std::size_t paths,
                               std::uint64_t seed, unsigned threads = 1) {
  check_hurst(hurst);
  if (length < 1 || length > kMaxSimulationLength)
    throw UsageError("simulate_type2 needs 1 <= N <= " + std::to_string(kMaxSimulationLength));
  if (paths < 1) throw UsageError("simulate_type2 needs at least one path");
  Ensemble ens;
  ens.hurst = hurst;
  ens.length = length;
  ens.paths = paths;
  ens.seed = seed;
  const Eigen::MatrixXd lower = type2_cholesky(hurst, length, &ens.jitter);
  ens.values.resize(length * paths);

  constexpr std::size_t batch = 256;
  const std::size_t batches = (paths + batch - 1) / batch;
  const auto n = static_cast<Eigen::Index>(length);
  parallel_for(batches, threads, [&](std::size_t bi) {
    const std::size_t first = bi * batch;
    const std::size_t cols = std::min(batch, paths - first);
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      NormalSource normal(path_seed(seed, first + c));
      for (Eigen::Index r = 0; r < n; ++r) z(r, static_cast<Eigen::Index>(c)) = normal();
    }
    const Eigen::MatrixXd b = lower.triangularView<Eigen::Lower>() * z;
    for (std::size_t c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        ens.values[(first + c) * length + static_cast<std::size_t>(r)] = b(r, static_cast<Eigen::Index>(c));
  });
  return ens;
}

struct EnsembleStatistic {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
};

// Cross-path Pearson correlation of B(i+j) - B(i) and B(i+k+j) - B(i+k).
// Standard error (1 - r^2) / sqrt(P - 1).
inline EnsembleStatistic ensemble_increment_correlation(const Ensemble& ens, std::size_t k,
                                                        std::size_t j, std::size_t i) {
  if (i + k + j > ens.length) throw RangeError("increment beyond simulated length", i + k + j);
  if (ens.paths < 3) throw DegenerateInputError("need at least 3 paths");
  CompensatedSum sx, sy;
  std::vector<double> xs(ens.paths), ys(ens.paths);
  for (std::size_t p = 0; p < ens.paths; ++p) {
    xs[p] = ens.at(p, i + j) - ens.at(p, i);
    ys[p] = ens.at(p, i + k + j) - ens.at(p, i + k);
    sx.add(xs[p]);
    sy.add(ys[p]);
  }
  const double mx = sx.value() / static_cast<double>(ens.paths);
  const double my = sy.value() / static_cast<double>(ens.paths);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t p = 0; p < ens.paths; ++p) {
    sxy.add((xs[p] - mx) * (ys[p] - my));
    sxx.add((xs[p] - mx) * (xs[p] - mx));
    syy.add((ys[p] - my) * (ys[p] - my));
  }
  const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return {"corr_k" + std::to_string(k) + "_j" + std::to_string(j) + "_i" + std::to_string(i), r,
          (1.0 - r * r) / std::sqrt(static_cast<double>(ens.paths - 1))};
}

// E[B(N)^2] / N^(2H) estimated with the known zero mean.
inline EnsembleStatistic ensemble_terminal_variance_ratio(const Ensemble& ens) {
  const double scale = std::pow(static_cast<double>(ens.length), 2.0 * ens.hurst);
  std::vector<double> r(ens.paths);
  for (std::size_t p = 0; p < ens.paths; ++p) {
    const double b = ens.at(p, ens.length);
    r[p] = b * b / scale;
  }
  const double mean = compensated_sum(r) / static_cast<double>(ens.paths);
  CompensatedSum ss;
  for (double v : r) ss.add((v - mean) * (v - mean));
  const double sd = std::sqrt(ss.value() / static_cast<double>(ens.paths - 1));
  return {"var_ratio_N", mean, sd / std::sqrt(static_cast<double>(ens.paths))};
}

}  // namespace primescale
