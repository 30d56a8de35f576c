#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "primescale/error.hpp"
#include "primescale/numeric.hpp"

namespace primescale {

// Termination controls for the series evaluations below. A series stops once
// |term| <= max(abs_tol, rel_tol * |partial sum|).
struct Accuracy {
  double abs_tol = 1e-300;
  double rel_tol = 1e-17;
  int max_terms = 100000;

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0) || max_terms < 1)
      throw UsageError("Accuracy needs positive tolerances and max_terms >= 1");
  }
  bool done(double term, double sum) const noexcept {
    return std::abs(term) <= std::max(abs_tol, rel_tol * std::abs(sum));
  }
};

namespace detail {

[[noreturn]] inline void no_convergence(const char* what, int terms) {
  throw NumericError(std::string(what) + ": series did not converge in " + std::to_string(terms) +
                     " terms");
}

// gamma + ln|y| + sum_k y^k / (k k!). All terms positive for y > 0.
inline double ei_series(double y, const Accuracy& acc) {
  CompensatedSum sum;
  sum.add(std::numbers::egamma);
  sum.add(std::log(std::abs(y)));
  double power = 1.0;  // y^k / k!
  for (int k = 1; k <= acc.max_terms; ++k) {
    power *= y / k;
    const double term = power / k;
    sum.add(term);
    if (acc.done(term, sum.value())) return sum.value();
  }
  no_convergence("ei", acc.max_terms);
}

// e^y / y * sum_k k! / y^k, truncated before the terms start growing.
inline double ei_asymptotic(double y, const Accuracy& acc) {
  CompensatedSum sum;
  double term = 1.0;
  sum.add(term);
  for (int k = 1; k <= acc.max_terms; ++k) {
    const double next = term * k / y;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum.add(term);
    if (acc.done(term, sum.value())) break;
  }
  return std::exp(y) / y * sum.value();
}

// E1(x) for x > 1 by modified Lentz evaluation of the continued fraction.
inline double e1_continued_fraction(double x, const Accuracy& acc) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= acc.max_terms; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) <= std::max(acc.rel_tol, 4 * std::numeric_limits<double>::epsilon()))
      return h * std::exp(-x);
  }
  no_convergence("e1", acc.max_terms);
}

}  // namespace detail

// Exponential integral Ei(y), principal value, y != 0.
inline double ei(double y, const Accuracy& acc = {}) {
  if (std::isnan(y) || y == 0.0) throw DomainError("ei: argument must be nonzero");
  if (y > 0) return y <= 44.0 ? detail::ei_series(y, acc) : detail::ei_asymptotic(y, acc);
  if (y >= -1.0) return detail::ei_series(y, acc);
  return -detail::e1_continued_fraction(-y, acc);
}

// Logarithmic integral Li(x) = Ei(ln x) for x > 1.
inline double li(double x, const Accuracy& acc = {}) {
  if (!(x > 1.0)) throw DomainError("li: argument must exceed 1");
  return ei(std::log(x), acc);
}

// Integral of 1/ln t over [p, q]. Short intervals use Gauss-Legendre
// quadrature directly, which avoids subtracting two values of size ~q/ln q.
inline double li_increment(double p, double q) {
  if (!(p > 1.0) || !(q >= p)) throw DomainError("li_increment: need 1 < p <= q");
  if (q == p) return 0.0;
  const double half = 0.5 * (q - p);
  const double mid = 0.5 * (q + p);
  const double ratio = (q - p) / p;
  if (ratio <= 1e-3) {
    constexpr double x1 = 0.7745966692414833770358531;
    return half * ((5.0 / 9.0) * (1.0 / std::log(mid - half * x1) + 1.0 / std::log(mid + half * x1)) +
                   (8.0 / 9.0) / std::log(mid));
  }
  if (ratio <= 0.05) {
    constexpr double x1 = 0.5384693101056830910363144;
    constexpr double x2 = 0.9061798459386639927976269;
    constexpr double w0 = 0.5688888888888888888888889;
    constexpr double w1 = 0.4786286704993664680412915;
    constexpr double w2 = 0.2369268850561890875142640;
    return half * (w0 / std::log(mid) +
                   w1 * (1.0 / std::log(mid - half * x1) + 1.0 / std::log(mid + half * x1)) +
                   w2 * (1.0 / std::log(mid - half * x2) + 1.0 / std::log(mid + half * x2)));
  }
  return li(q) - li(p);
}

namespace detail {

// Direct Gauss series of 2F1(1, b; c; z); with a = 1 the term ratio is
// (b + n) z / (c + n).
inline double hyp2f1_a1_series(double b, double c, double z, const Accuracy& acc) {
  CompensatedSum sum;
  double term = 1.0;
  sum.add(term);
  for (int n = 0; n < acc.max_terms; ++n) {
    term *= (b + n) / (c + n) * z;
    sum.add(term);
    if (acc.done(term, sum.value())) return sum.value();
  }
  no_convergence("hyp2f1_row", acc.max_terms);
}

inline double hyp2f1_row_nondegenerate(double hurst, double z, const Accuracy& acc) {
  const double b = 0.5 - hurst;
  const double c = 1.5 + hurst;
  if (z <= 0.98) return hyp2f1_a1_series(b, c, z, acc);
  // z -> 1 - z connection. With a = 1 the second hypergeometric collapses
  // to 2F1(c-a, c-b; c-b; w) = (1 - w)^(a - c) = z^(-(1/2 + H)).
  const double w = 1.0 - z;
  const double head = (0.5 + hurst) / (2.0 * hurst);
  const double regular = hyp2f1_a1_series(b, 1.0 - 2.0 * hurst, w, acc);
  if (w == 0.0) return head;
  const double singular_coeff =
      std::tgamma(c) * std::tgamma(-2.0 * hurst) / std::tgamma(b);
  return head * regular + singular_coeff * std::pow(w, 2.0 * hurst) * std::pow(z, -(0.5 + hurst));
}

}  // namespace detail

// 2F1(1, 1/2 - H; 3/2 + H; z) for 0 < H < 1 and 0 <= z <= 1.
inline double hyp2f1_row(double hurst, double z, const Accuracy& acc = {}) {
  acc.validate();
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("hyp2f1_row: H must lie in (0, 1)");
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("hyp2f1_row: z must lie in [0, 1]");
  if (z == 0.0 || hurst == 0.5) return 1.0;
  // At H = 1/2 the connection coefficients have canceling poles. The value is
  // exactly 1 there and smooth in H, so interpolate across the gap.
  constexpr double gap = 1e-6;
  constexpr double step = 1e-4;
  if (z > 0.98 && std::abs(hurst - 0.5) < gap) {
    const double slope = (detail::hyp2f1_row_nondegenerate(0.5 + step, z, acc) -
                          detail::hyp2f1_row_nondegenerate(0.5 - step, z, acc)) /
                         (2 * step);
    return 1.0 + (hurst - 0.5) * slope;
  }
  return detail::hyp2f1_row_nondegenerate(hurst, z, acc);
}

}  // namespace primescale
