#ifndef CONVEXINEQ_FUNCTIONALS_HPP
#define CONVEXINEQ_FUNCTIONALS_HPP

#include <cmath>
#include <span>
#include <sstream>

#include "convexineq/fields.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq {

namespace detail {

/// Field value checked against its declared range and Φ's domain.
inline double value_in_domain(const ScalarField& f, const PhiFunction& phi, const Vec& x) {
  const double v = f.checked(x);
  if (!phi.interval.contains(v)) {
    std::ostringstream os;
    os << "field " << f.label << " = " << v << " leaves the domain of " << phi.label
       << " at x = [" << x.transpose() << "]";
    throw DomainError(os.str());
  }
  return v;
}

}  // namespace detail

/// Ent^Φ_μ(f) = ∫Φ(f)dμ − Φ(∫f dμ). Both terms come from the same backend;
/// the error of Φ(∫f) enters through the delta method.
inline Estimate phi_entropy(const Integrator& integ, const PhiFunction& phi, const ScalarField& f) {
  return integ.estimate(
      2,
      [&](const Vec& x, std::span<double> out) {
        const double v = detail::value_in_domain(f, phi, x);
        out[0] = phi(v);
        out[1] = v;
      },
      [&phi](std::span<const double> m) {
        if (!phi.interval.contains(m[1])) return std::numeric_limits<double>::quiet_NaN();
        return m[0] - phi(m[1]);
      });
}

inline Estimate phi_entropy(const ConvexMeasure& m, const PhiFunction& phi, const ScalarField& f,
                            const IntegrationOptions& opts) {
  return phi_entropy(Integrator(m, opts), phi, f);
}

inline Estimate variance(const Integrator& integ, const ScalarField& f) {
  return integ.estimate(
      2,
      [&](const Vec& x, std::span<double> out) {
        const double v = f.checked(x);
        out[0] = v * v;
        out[1] = v;
      },
      [](std::span<const double> m) { return m[0] - m[1] * m[1]; });
}

inline Estimate variance(const ConvexMeasure& m, const ScalarField& f, const IntegrationOptions& opts) {
  return variance(Integrator(m, opts), f);
}

/// cov(g, h) = ∫gh dμ − ∫g dμ ∫h dμ.
inline Estimate covariance(const Integrator& integ, const ScalarField& g, const ScalarField& h) {
  return integ.estimate(
      3,
      [&](const Vec& x, std::span<double> out) {
        const double a = g.checked(x), b = h.checked(x);
        out[0] = a * b;
        out[1] = a;
        out[2] = b;
      },
      [](std::span<const double> m) { return m[0] - m[1] * m[2]; });
}

inline Estimate covariance(const ConvexMeasure& m, const ScalarField& g, const ScalarField& h,
                           const IntegrationOptions& opts) {
  return covariance(Integrator(m, opts), g, h);
}

/// ∫|∇f|²φ dμ.
inline Estimate weighted_dirichlet(const Integrator& integ, const ScalarField& f) {
  const auto& pot = integ.measure().potential();
  return integ.estimate(
      1, [&](const Vec& x, std::span<double> out) { out[0] = f.grad(x).squaredNorm() * pot.value(x); },
      [](std::span<const double> m) { return m[0]; });
}

inline Estimate weighted_dirichlet(const ConvexMeasure& m, const ScalarField& f, const IntegrationOptions& opts) {
  return weighted_dirichlet(Integrator(m, opts), f);
}

/// ∫Φ''(f)|∇f|²φ dμ.
inline Estimate phi_weighted_energy(const Integrator& integ, const PhiFunction& phi, const ScalarField& f) {
  const auto& pot = integ.measure().potential();
  return integ.estimate(
      1,
      [&](const Vec& x, std::span<double> out) {
        const double v = detail::value_in_domain(f, phi, x);
        out[0] = phi.d(2, v) * f.grad(x).squaredNorm() * pot.value(x);
      },
      [](std::span<const double> m) { return m[0]; });
}

inline Estimate phi_weighted_energy(const ConvexMeasure& m, const PhiFunction& phi, const ScalarField& f,
                                    const IntegrationOptions& opts) {
  return phi_weighted_energy(Integrator(m, opts), phi, f);
}

}  // namespace convexineq

#endif  // CONVEXINEQ_FUNCTIONALS_HPP
