#ifndef CONVEXINEQ_PHI_FUNCTIONS_HPP
#define CONVEXINEQ_PHI_FUNCTIONS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"

namespace convexineq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double t) const { return t > lo && t < hi; }
  bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
};

/// Convex entropy function Φ on an open interval with four derivatives.
struct PhiFunction {
  Interval interval;
  std::array<std::function<double(double)>, 5> derivs;
  std::string label;
  /// Φ''Φ⁽⁴⁾/(Φ⁽³⁾)², when it does not depend on t (powers t^a, a ≠ 2).
  std::optional<double> constant_ratio;

  double operator()(double t) const { return derivs[0](t); }
  double d(int k, double t) const { return derivs.at(k)(t); }
};

inline PhiFunction phi_square() {
  PhiFunction f;
  f.label = "square";
  f.derivs = {[](double t) { return t * t; }, [](double t) { return 2 * t; },
              [](double) { return 2.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  return f;
}

inline PhiFunction phi_xlogx() {
  PhiFunction f;
  f.label = "xlogx";
  f.interval = {0.0, kInf};
  f.derivs = {[](double t) { return t * std::log(t); }, [](double t) { return std::log(t) + 1; },
              [](double t) { return 1 / t; }, [](double t) { return -1 / (t * t); },
              [](double t) { return 2 / (t * t * t); }};
  f.constant_ratio = 2.0;
  return f;
}

/// Φ_p(t) = t^{2/p} on (0, ∞); convex for p ∈ (0, 2].
inline PhiFunction phi_power(double p) {
  if (!(p > 0 && p <= 2)) {
    std::ostringstream os;
    os << "power entropy needs p in (0, 2], got " << p;
    throw ParameterError(os.str());
  }
  const double a = 2.0 / p;
  const double c1 = a, c2 = a * (a - 1), c3 = c2 * (a - 2), c4 = c3 * (a - 3);
  PhiFunction f;
  std::ostringstream os;
  os << "power(" << p << ")";
  f.label = os.str();
  f.interval = {0.0, kInf};
  f.derivs = {[a](double t) { return std::pow(t, a); },
              [a, c1](double t) { return c1 * std::pow(t, a - 1); },
              [a, c2](double t) { return c2 * std::pow(t, a - 2); },
              [a, c3](double t) { return c3 * std::pow(t, a - 3); },
              [a, c4](double t) { return c4 * std::pow(t, a - 4); }};
  if (a != 2.0) f.constant_ratio = (3 - a) / (2 - a);
  return f;
}

/// square, xlogx and power(p).
inline std::vector<PhiFunction> builtin_phis(double p = 1.5) {
  return {phi_square(), phi_xlogx(), phi_power(p)};
}

inline void require_beta_above(double beta, int n, double bound, const char* what, bool strict) {
  if (n < 1) throw ParameterError("dimension must be positive");
  const bool ok = strict ? beta > bound : beta >= bound;
  if (!ok || !std::isfinite(beta)) {
    std::ostringstream os;
    os << what << " needs beta " << (strict ? ">" : ">=") << " n+1 = " << bound << ", got beta = " << beta;
    throw OutOfRangeError(os.str());
  }
}

/// K(β, n) = ((4β−5)² + n − 1) / (8(β−1)(β−n−1)), the admissibility constant.
inline double condition_constant_K(double beta, int n) {
  require_beta_above(beta, n, n + 1.0, "admissibility constant", true);
  const double a = 4 * beta - 5;
  return (a * a + n - 1) / (8 * (beta - 1) * (beta - n - 1));
}

/// Largest Beckner exponent p_β with Φ_p admissible.
inline double p_beta(double beta, int n) {
  require_beta_above(beta, n, n + 1.0, "p_beta", true);
  const double u = beta - 1;
  return 1 + 4 * u * (beta - n - 1) / (4 * u * u + 4 * (3 * n - 2) * u + n);
}

/// Hölder threshold of the covariance estimate; +∞ when n = 1.
inline double p_beta_n(double beta, int n) {
  require_beta_above(beta, n, n + 1.0, "p_beta_n", false);
  if (n == 1) return kInf;
  const double prod = (beta - 1) * (beta - 2) * (beta - n) * (beta - n - 1);
  return 2 * (1 + ((beta - 1) * (beta - n - 1) + std::sqrt(std::max(prod, 0.0))) / (n - 1));
}

struct AdmissibilityResult {
  bool admissible = true;
  std::optional<double> witness;
  /// min over samples of (Φ⁽⁴⁾Φ'' − K(Φ⁽³⁾)²) / max(|Φ⁽⁴⁾Φ''|, K(Φ⁽³⁾)²).
  double worst_relative_margin = kInf;
};

/// Checks Φ⁽⁴⁾Φ'' ≥ K(β,n)(Φ⁽³⁾)² at every sample, up to relative tolerance.
inline AdmissibilityResult is_admissible(const PhiFunction& phi, double beta, int n,
                                         std::span<const double> samples, double rel_tol = 1e-9) {
  const double k = condition_constant_K(beta, n);
  if (samples.empty()) throw ParameterError("admissibility check needs sample points");
  AdmissibilityResult r;
  for (double t : samples) {
    if (!phi.interval.contains(t)) {
      std::ostringstream os;
      os << "sample point " << t << " lies outside the domain of " << phi.label;
      throw ParameterError(os.str());
    }
    const double d2 = phi.d(2, t), d3 = phi.d(3, t), d4 = phi.d(4, t);
    if (!std::isfinite(d2) || !std::isfinite(d3) || !std::isfinite(d4)) {
      std::ostringstream os;
      os << "non-finite derivative of " << phi.label << " at t = " << t;
      throw EvaluationError(os.str());
    }
    const double lhs = d4 * d2;
    const double rhs = k * d3 * d3;
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    const double rel = scale > 0 ? (lhs - rhs) / scale : 0.0;
    if (rel < r.worst_relative_margin) r.worst_relative_margin = rel;
    if (rel < -rel_tol && r.admissible) {
      r.admissible = false;
      r.witness = t;
    }
  }
  return r;
}

/// 512 points log-uniform over [lo, hi] when lo > 0, uniform otherwise.
/// Infinite ends are replaced by a working range.
inline std::vector<double> default_sample_points(Interval range, int count = 512) {
  double lo = range.lo, hi = range.hi;
  const bool positive = lo >= 0;
  if (positive) {
    if (!std::isfinite(hi)) hi = 1e3;
    if (lo <= 0) lo = 1e-3;
  } else {
    if (!std::isfinite(lo)) lo = -10;
    if (!std::isfinite(hi)) hi = 10;
  }
  std::vector<double> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double s = (i + 0.5) / count;
    pts.push_back(positive ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s);
  }
  return pts;
}

}  // namespace convexineq

#endif  // CONVEXINEQ_PHI_FUNCTIONS_HPP
