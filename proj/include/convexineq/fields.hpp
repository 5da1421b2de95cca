#ifndef CONVEXINEQ_FIELDS_HPP
#define CONVEXINEQ_FIELDS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/linalg.hpp"
#include "convexineq/phi_functions.hpp"

namespace convexineq {

/// Test function f: R^n → R. Gradient and Hessian are analytic when set and
/// fall back to central differences (step 1e-5·(1+|x|)) otherwise.
/// `range` is the closed interval the values are asserted to lie in.
struct ScalarField {
  int dim = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  Interval range;
  std::string label;

  double operator()(const Vec& x) const { return value(x); }

  Vec grad(const Vec& x) const {
    if (gradient) return gradient(x);
    return fd_gradient(value, x, 1e-5);
  }

  Mat hess(const Vec& x) const {
    if (hessian) return hessian(x);
    auto g = [this](const Vec& y) { return grad(y); };
    return fd_jacobian_sym(g, x, gradient ? 1e-5 : 1e-4);
  }

  double laplacian(const Vec& x) const { return hess(x).trace(); }

  /// Value with finiteness and declared-range checks.
  double checked(const Vec& x) const {
    const double v = value(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "field " << label << " is not finite at x = [" << x.transpose() << "]";
      throw EvaluationError(os.str());
    }
    if (v < range.lo || v > range.hi) {
      std::ostringstream os;
      os << "field " << label << " = " << v << " leaves its declared range [" << range.lo << ", "
         << range.hi << "] at x = [" << x.transpose() << "]";
      throw DomainError(os.str());
    }
    return v;
  }
};

namespace fields {

inline void check_dim(int n) {
  if (n < 1) throw ParameterError("field dimension must be positive");
}
inline void check_axis(int n, int axis) {
  if (axis < 0 || axis >= n) throw ParameterError("field axis out of range");
}

inline ScalarField constant(int n, double c) {
  check_dim(n);
  ScalarField f;
  f.dim = n;
  f.value = [c](const Vec&) { return c; };
  f.gradient = [n](const Vec&) -> Vec { return Vec::Zero(n); };
  f.hessian = [n](const Vec&) -> Mat { return Mat::Zero(n, n); };
  f.range = {c, c};
  f.label = "constant";
  return f;
}

/// x ↦ ⟨a, x⟩ + b.
inline ScalarField linear(const Vec& a, double b = 0.0) {
  const int n = static_cast<int>(a.size());
  check_dim(n);
  ScalarField f;
  f.dim = n;
  f.value = [a, b](const Vec& x) { return a.dot(x) + b; };
  f.gradient = [a](const Vec&) -> Vec { return a; };
  f.hessian = [n](const Vec&) -> Mat { return Mat::Zero(n, n); };
  f.range = a.isZero() ? Interval{b, b} : Interval{};
  f.label = "linear";
  return f;
}

inline ScalarField coordinate(int n, int axis) {
  check_dim(n);
  check_axis(n, axis);
  ScalarField f = linear(Vec::Unit(n, axis));
  f.label = "x" + std::to_string(axis + 1);
  return f;
}

/// base + amplitude·exp(−|x − center|²/width²).
inline ScalarField gaussian_bump(const Vec& center, double base, double amplitude, double width) {
  const int n = static_cast<int>(center.size());
  check_dim(n);
  if (!(width > 0)) throw ParameterError("bump width must be positive");
  const double w2 = width * width;
  ScalarField f;
  f.dim = n;
  f.value = [=](const Vec& x) { return base + amplitude * std::exp(-(x - center).squaredNorm() / w2); };
  f.gradient = [=](const Vec& x) -> Vec {
    const Vec d = x - center;
    return amplitude * std::exp(-d.squaredNorm() / w2) * (-2.0 / w2) * d;
  };
  f.hessian = [=](const Vec& x) -> Mat {
    const Vec d = x - center;
    const double e = amplitude * std::exp(-d.squaredNorm() / w2);
    return e * ((4.0 / (w2 * w2)) * d * d.transpose() - (2.0 / w2) * Mat::Identity(n, n));
  };
  f.range = {std::min(base, base + amplitude), std::max(base, base + amplitude)};
  f.label = "gaussian_bump";
  return f;
}

/// Σ_k c_k x_axis^k.
inline ScalarField polynomial(int n, int axis, std::vector<double> coeffs) {
  check_dim(n);
  check_axis(n, axis);
  if (coeffs.empty()) coeffs = {0.0};
  ScalarField f;
  f.dim = n;
  auto horner = [](const std::vector<double>& c, double t) {
    double v = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
    return v;
  };
  std::vector<double> d1, d2;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d1.push_back(k * coeffs[k]);
  for (std::size_t k = 1; k < d1.size(); ++k) d2.push_back(k * d1[k]);
  f.value = [=](const Vec& x) { return horner(coeffs, x(axis)); };
  f.gradient = [=](const Vec& x) -> Vec {
    Vec g = Vec::Zero(n);
    g(axis) = horner(d1, x(axis));
    return g;
  };
  f.hessian = [=](const Vec& x) -> Mat {
    Mat h = Mat::Zero(n, n);
    h(axis, axis) = horner(d2, x(axis));
    return h;
  };
  f.range = coeffs.size() == 1 ? Interval{coeffs[0], coeffs[0]} : Interval{};
  f.label = "polynomial";
  return f;
}

/// base + amplitude·tanh(x_axis/scale).
inline ScalarField tanh_ramp(int n, int axis, double base, double amplitude, double scale = 1.0) {
  check_dim(n);
  check_axis(n, axis);
  if (!(scale > 0)) throw ParameterError("tanh scale must be positive");
  ScalarField f;
  f.dim = n;
  f.value = [=](const Vec& x) { return base + amplitude * std::tanh(x(axis) / scale); };
  f.gradient = [=](const Vec& x) -> Vec {
    const double t = std::tanh(x(axis) / scale);
    Vec g = Vec::Zero(n);
    g(axis) = amplitude * (1 - t * t) / scale;
    return g;
  };
  f.hessian = [=](const Vec& x) -> Mat {
    const double t = std::tanh(x(axis) / scale);
    Mat h = Mat::Zero(n, n);
    h(axis, axis) = -2 * amplitude * t * (1 - t * t) / (scale * scale);
    return h;
  };
  f.range = {base - std::abs(amplitude), base + std::abs(amplitude)};
  f.label = "tanh";
  return f;
}

/// base + amplitude·sin(frequency·x_axis).
inline ScalarField sine(int n, int axis, double base, double amplitude, double frequency = 1.0) {
  check_dim(n);
  check_axis(n, axis);
  ScalarField f;
  f.dim = n;
  f.value = [=](const Vec& x) { return base + amplitude * std::sin(frequency * x(axis)); };
  f.gradient = [=](const Vec& x) -> Vec {
    Vec g = Vec::Zero(n);
    g(axis) = amplitude * frequency * std::cos(frequency * x(axis));
    return g;
  };
  f.hessian = [=](const Vec& x) -> Mat {
    Mat h = Mat::Zero(n, n);
    h(axis, axis) = -amplitude * frequency * frequency * std::sin(frequency * x(axis));
    return h;
  };
  f.range = {base - std::abs(amplitude), base + std::abs(amplitude)};
  f.label = "sine";
  return f;
}

inline Interval add(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }

/// s·f + c.
inline ScalarField affine(const ScalarField& f, double s, double c) {
  ScalarField g;
  g.dim = f.dim;
  g.value = [f, s, c](const Vec& x) { return s * f.value(x) + c; };
  g.gradient = [f, s](const Vec& x) -> Vec { return s * f.grad(x); };
  g.hessian = [f, s](const Vec& x) -> Mat { return s * f.hess(x); };
  if (s == 0) {
    g.range = {c, c};
  } else {
    const double a = s * f.range.lo + c, b = s * f.range.hi + c;
    g.range = {std::isnan(a) ? -kInf : std::min(a, b), std::isnan(b) ? kInf : std::max(a, b)};
  }
  std::ostringstream os;
  os << s << "*" << f.label << "+" << c;
  g.label = os.str();
  return g;
}

inline ScalarField sum(const ScalarField& f, const ScalarField& h) {
  if (f.dim != h.dim) throw ParameterError("field dimensions differ");
  ScalarField g;
  g.dim = f.dim;
  g.value = [f, h](const Vec& x) { return f.value(x) + h.value(x); };
  g.gradient = [f, h](const Vec& x) -> Vec { return f.grad(x) + h.grad(x); };
  g.hessian = [f, h](const Vec& x) -> Mat { return f.hess(x) + h.hess(x); };
  g.range = add(f.range, h.range);
  g.label = f.label + "+" + h.label;
  return g;
}

inline ScalarField product(const ScalarField& f, const ScalarField& h) {
  if (f.dim != h.dim) throw ParameterError("field dimensions differ");
  ScalarField g;
  g.dim = f.dim;
  g.value = [f, h](const Vec& x) { return f.value(x) * h.value(x); };
  g.gradient = [f, h](const Vec& x) -> Vec { return f.value(x) * h.grad(x) + h.value(x) * f.grad(x); };
  g.hessian = [f, h](const Vec& x) -> Mat {
    const Vec gf = f.grad(x), gh = h.grad(x);
    return f.value(x) * h.hess(x) + h.value(x) * f.hess(x) + gf * gh.transpose() + gh * gf.transpose();
  };
  const double c[] = {f.range.lo * h.range.lo, f.range.lo * h.range.hi, f.range.hi * h.range.lo,
                      f.range.hi * h.range.hi};
  if (std::any_of(std::begin(c), std::end(c), [](double v) { return std::isnan(v); })) {
    g.range = {};
  } else {
    g.range = {*std::min_element(std::begin(c), std::end(c)), *std::max_element(std::begin(c), std::end(c))};
  }
  g.label = "(" + f.label + ")*(" + h.label + ")";
  return g;
}

/// f^p for a positive field.
inline ScalarField power(const ScalarField& f, double p) {
  ScalarField g;
  g.dim = f.dim;
  auto base = [f](const Vec& x) {
    const double v = f.value(x);
    if (!(v > 0)) {
      std::ostringstream os;
      os << "power of non-positive field " << f.label << " at x = [" << x.transpose() << "]";
      throw DomainError(os.str());
    }
    return v;
  };
  g.value = [base, p](const Vec& x) { return std::pow(base(x), p); };
  g.gradient = [base, f, p](const Vec& x) -> Vec { return p * std::pow(base(x), p - 1) * f.grad(x); };
  g.hessian = [base, f, p](const Vec& x) -> Mat {
    const double v = base(x);
    const Vec gf = f.grad(x);
    return p * std::pow(v, p - 1) * f.hess(x) + p * (p - 1) * std::pow(v, p - 2) * gf * gf.transpose();
  };
  const double lo = std::max(f.range.lo, 0.0);
  g.range = {std::pow(lo, p), std::pow(f.range.hi, p)};
  if (p < 0) g.range = {std::pow(f.range.hi, p), lo > 0 ? std::pow(lo, p) : kInf};
  std::ostringstream os;
  os << "(" << f.label << ")^" << p;
  g.label = os.str();
  return g;
}

/// Same field with a different declared range.
inline ScalarField with_range(ScalarField f, Interval r) {
  f.range = r;
  return f;
}

}  // namespace fields
}  // namespace convexineq

#endif  // CONVEXINEQ_FIELDS_HPP
