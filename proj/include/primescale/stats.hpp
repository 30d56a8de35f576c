#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "primescale/error.hpp"
#include "primescale/numeric.hpp"

namespace primescale {

namespace detail {

inline double mean(std::span<const double> xs) {
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace detail

// Lag-k Pearson correlation: x drops the first k entries, y drops the last k,
// and each is centered on its own mean.
inline double pearson_lag(std::span<const double> seq, int k) {
  if (k < 1) throw UsageError("pearson_lag needs k >= 1");
  if (seq.size() < static_cast<std::size_t>(k) + 3)
    throw UsageError("pearson_lag needs at least k + 3 entries");
  const std::size_t len = seq.size() - static_cast<std::size_t>(k);
  const auto x = seq.subspan(static_cast<std::size_t>(k), len);
  const auto y = seq.first(len);
  const double mx = detail::mean(x);
  const double my = detail::mean(y);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < len; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0)
    throw DegenerateInputError("pearson_lag: zero variance in a lagged subsequence");
  return std::clamp(sxy.value() / (std::sqrt(sxx.value()) * std::sqrt(syy.value())), -1.0, 1.0);
}

// Sample variance with the N - 1 denominator.
inline double variance(std::span<const double> seq) {
  if (seq.size() < 4) throw UsageError("variance needs at least 4 entries");
  const double m = detail::mean(seq);
  CompensatedSum s;
  for (double v : seq) s.add((v - m) * (v - m));
  return s.value() / static_cast<double>(seq.size() - 1);
}

// Moment-ratio kurtosis m4 / m2^2; a Gaussian gives 3.
inline double kurtosis(std::span<const double> seq) {
  if (seq.size() < 4) throw UsageError("kurtosis needs at least 4 entries");
  const double m = detail::mean(seq);
  CompensatedSum s2, s4;
  for (double v : seq) {
    const double d2 = (v - m) * (v - m);
    s2.add(d2);
    s4.add(d2 * d2);
  }
  if (s2.value() <= 0.0) throw DegenerateInputError("kurtosis: zero variance");
  const double n = static_cast<double>(seq.size());
  const double m2 = s2.value() / n;
  return s4.value() / n / (m2 * m2);
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.95;
  double slope_stderr = 0.0;

  bool ci_contains(double v) const noexcept { return ci_lo <= v && v <= ci_hi; }
};

// Two-sided Student-t quantile for the given confidence level.
inline double student_t_critical(double level, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
}

// Ordinary least squares y = intercept + slope x with a Student-t confidence
// interval (N - 2 degrees of freedom) on the slope.
inline FitResult ols_slope_ci(std::span<const Point> points, double level = 0.95) {
  if (points.size() < 3) throw FitError("ols_slope_ci needs at least 3 points");
  if (!(level > 0.0 && level < 1.0)) throw FitError("confidence level must lie in (0, 1)");
  const double n = static_cast<double>(points.size());
  CompensatedSum sx, sy;
  for (const auto& p : points) {
    sx.add(p.x);
    sy.add(p.y);
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, sxy;
  for (const auto& p : points) {
    sxx.add((p.x - mx) * (p.x - mx));
    sxy.add((p.x - mx) * (p.y - my));
  }
  if (!(sxx.value() > 0.0)) throw FitError("ols_slope_ci: abscissae are all equal");
  FitResult fit;
  fit.level = level;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum sse;
  for (const auto& p : points) {
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    sse.add(r * r);
  }
  fit.slope_stderr = std::sqrt(std::max(0.0, sse.value()) / (n - 2.0) / sxx.value());
  const double half = student_t_critical(level, n - 2.0) * fit.slope_stderr;
  fit.ci_lo = fit.slope - half;
  fit.ci_hi = fit.slope + half;
  return fit;
}

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

inline Aggregate aggregate_grid(std::span<const double> cells) {
  if (cells.size() < 2) throw DegenerateInputError("aggregate_grid needs at least 2 cells");
  const double m = detail::mean(cells);
  CompensatedSum s;
  for (double c : cells) s.add((c - m) * (c - m));
  return {m, std::sqrt(s.value() / static_cast<double>(cells.size() - 1))};
}

// Per-m summary of one correlation grid.
struct ScaleSummary {
  Aggregate aggregate;
  std::optional<FitResult> slope;  // present when at least 3 n values exist
};

// C_k(m, n) for one lag k over a rectangle of (m, n), with per-m aggregates.
class CorrelationGrid {
 public:
  using Key = std::pair<int, int>;  // (m, n)

  CorrelationGrid() = default;
  explicit CorrelationGrid(int k) : k_(k) {}

  int k() const noexcept { return k_; }
  const std::map<Key, double>& cells() const noexcept { return cells_; }

  void set(int m, int n, double value) {
    if (!(value >= -1.0 && value <= 1.0))
      throw NumericError("correlation outside [-1, 1] at m=" + std::to_string(m) + " n=" + std::to_string(n));
    cells_[{m, n}] = value;
  }
  double at(int m, int n) const {
    const auto it = cells_.find({m, n});
    if (it == cells_.end())
      throw RangeError("no cell for m=" + std::to_string(m) + " n=" + std::to_string(n), 0);
    return it->second;
  }
  bool contains(int m, int n) const { return cells_.count({m, n}) != 0; }

  std::vector<int> ms() const {
    std::vector<int> out;
    for (const auto& [key, v] : cells_)
      if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
  }

  // Cells of one m ordered by n.
  std::vector<std::pair<int, double>> row(int m) const {
    std::vector<std::pair<int, double>> out;
    for (auto it = cells_.lower_bound({m, std::numeric_limits<int>::min()});
         it != cells_.end() && it->first.first == m; ++it)
      out.emplace_back(it->first.second, it->second);
    return out;
  }

  ScaleSummary summarize(int m, double level = 0.95) const {
    const auto r = row(m);
    std::vector<double> values;
    std::vector<Point> points;
    for (const auto& [n, v] : r) {
      values.push_back(v);
      points.push_back({static_cast<double>(n), v});
    }
    ScaleSummary s{aggregate_grid(values), std::nullopt};
    if (points.size() >= 3) s.slope = ols_slope_ci(points, level);
    return s;
  }

  bool same_support(const CorrelationGrid& other) const {
    if (k_ != other.k_ || cells_.size() != other.cells_.size()) return false;
    return std::equal(cells_.begin(), cells_.end(), other.cells_.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; });
  }

 private:
  int k_ = 1;
  std::map<Key, double> cells_;
};

}  // namespace primescale
