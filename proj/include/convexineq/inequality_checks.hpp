#ifndef CONVEXINEQ_INEQUALITY_CHECKS_HPP
#define CONVEXINEQ_INEQUALITY_CHECKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/functionals.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/linalg.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq {

enum class InequalityId { phi_entropy, beckner, poincare, covariance, limit_lsi, limit_ccl };
enum class Verdict { holds, holds_with_equality, violated, inconclusive };

inline std::string to_string(InequalityId id) {
  switch (id) {
    case InequalityId::phi_entropy: return "phi_entropy";
    case InequalityId::beckner: return "beckner";
    case InequalityId::poincare: return "poincare";
    case InequalityId::covariance: return "covariance";
    case InequalityId::limit_lsi: return "limit_lsi";
    case InequalityId::limit_ccl: return "limit_ccl";
  }
  return "unknown";
}

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::holds_with_equality: return "holds_with_equality";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string method;
};

struct InequalityReport {
  InequalityId id = InequalityId::phi_entropy;
  double lhs = 0;
  double lhs_err = 0;
  double rhs = 0;
  double rhs_err = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::inconclusive;
  Provenance provenance;
  std::string label;
  double parameter = std::numeric_limits<double>::quiet_NaN();  // p, or β for limit sweeps
  std::string note;
};

inline constexpr double kDegenerate = 1e-12;

/// violated: lhs > rhs + 3·err; inconclusive: 3·err > 10% of max(|lhs|, |rhs|);
/// equality: |lhs − rhs| ≤ 3·err; otherwise holds. err = lhs_err + rhs_err.
/// Both sides below 1e-12 count as 0 ≤ 0 unless `degenerate_inconclusive`.
inline Verdict classify(double lhs, double lhs_err, double rhs, double rhs_err, bool degenerate_inconclusive = false) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs) || !std::isfinite(lhs_err) || !std::isfinite(rhs_err)) {
    return Verdict::inconclusive;
  }
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale <= kDegenerate) return degenerate_inconclusive ? Verdict::inconclusive : Verdict::holds;
  const double band = 3 * (lhs_err + rhs_err);
  if (lhs > rhs + band) return Verdict::violated;
  if (band > 0.1 * scale) return Verdict::inconclusive;
  if (std::abs(lhs - rhs) <= band) return Verdict::holds_with_equality;
  return Verdict::holds;
}

inline InequalityReport make_report(InequalityId id, const Estimate& lhs, const Estimate& rhs, const Integrator& integ,
                                    bool degenerate_inconclusive = false) {
  InequalityReport r;
  r.id = id;
  r.lhs = lhs.value;
  r.lhs_err = lhs.error;
  r.rhs = rhs.value;
  r.rhs_err = rhs.error;
  if (rhs.value != 0) r.ratio = lhs.value / rhs.value;
  r.verdict = classify(lhs.value, lhs.error, rhs.value, rhs.error, degenerate_inconclusive);
  r.provenance.method = to_string(integ.method());
  r.provenance.seed = integ.options().mc.seed;
  return r;
}

inline void require_theorem1(const ConvexMeasure& m) {
  require_beta_above(m.beta(), m.dim(), m.dim() + 1.0, "entropy inequality", true);
  if (!(m.convexity_constant() > 0)) {
    throw PreconditionError("entropy inequality needs a uniformly convex potential (c > 0)");
  }
}

/// Intersection of the field range with Φ's interval, as admissibility samples.
inline std::vector<double> admissibility_samples(const PhiFunction& phi, const ScalarField& f) {
  Interval r{std::max(phi.interval.lo, f.range.lo), std::min(phi.interval.hi, f.range.hi)};
  if (r.lo == r.hi) {
    if (phi.interval.contains(r.lo)) return {r.lo};
    r = phi.interval;
  }
  auto pts = default_sample_points(r);
  std::erase_if(pts, [&phi](double t) { return !phi.interval.contains(t); });
  if (pts.empty()) pts = default_sample_points(phi.interval);
  return pts;
}

/// Ent^Φ(f) ≤ (1/(2c(β−1)))∫Φ''(f)|∇f|²φ dμ.
inline InequalityReport check_phi_entropy(const Integrator& integ, const PhiFunction& phi, const ScalarField& f) {
  const ConvexMeasure& m = integ.measure();
  require_theorem1(m);
  const auto samples = admissibility_samples(phi, f);
  const auto adm = is_admissible(phi, m.beta(), m.dim(), samples);
  if (!adm.admissible) {
    std::ostringstream os;
    os << phi.label << " is not admissible for beta = " << m.beta() << ", n = " << m.dim() << " (fails at t = "
       << *adm.witness << ", K = " << condition_constant_K(m.beta(), m.dim()) << ")";
    throw PreconditionError(os.str());
  }
  const auto& pot = m.potential();
  const double k = 1.0 / (2 * m.convexity_constant() * (m.beta() - 1));
  const Combine combines[] = {
      [&phi](std::span<const double> v) {
        if (!phi.interval.contains(v[1])) return std::numeric_limits<double>::quiet_NaN();
        return v[0] - phi(v[1]);
      },
      [k](std::span<const double> v) { return k * v[2]; }};
  const auto est = integ.estimate(
      3,
      [&](const Vec& x, std::span<double> out) {
        const double t = detail::value_in_domain(f, phi, x);
        out[0] = phi(t);
        out[1] = t;
        out[2] = phi.d(2, t) * f.grad(x).squaredNorm() * pot.value(x);
      },
      combines);
  auto r = make_report(InequalityId::phi_entropy, est[0], est[1], integ);
  r.label = phi.label + " / " + f.label;
  return r;
}

inline void require_beckner_exponent(const ConvexMeasure& m, double p) {
  require_theorem1(m);
  const double pb = p_beta(m.beta(), m.dim());
  if (!(p >= 1 && p <= pb * (1 + 1e-12))) {
    std::ostringstream os;
    os << "Beckner exponent p = " << p << " outside [1, p_beta] with p_beta = " << pb;
    throw ThresholdError(os.str(), pb);
  }
}

namespace detail {

inline double positive_power(const ScalarField& f, const Vec& x, double t, double p) {
  if (p == 1) return t;
  if (!(t > 0)) {
    std::ostringstream os;
    os << "Beckner field " << f.label << " = " << t << " is not positive at x = [" << x.transpose() << "]";
    throw DomainError(os.str());
  }
  return std::pow(t, p);
}

}  // namespace detail

/// ∫f² − (∫f^p)^{2/p} ≤ ((2−p)/(c(β−1)))∫|∇f|²φ dμ for p ∈ [1, p_β].
/// At p = 1 the field may change sign and the report is the weighted Poincaré form.
inline InequalityReport check_beckner(const Integrator& integ, double p, const ScalarField& f) {
  const ConvexMeasure& m = integ.measure();
  require_beckner_exponent(m, p);
  const auto& pot = m.potential();
  const double k = (2 - p) / (m.convexity_constant() * (m.beta() - 1));
  const Combine combines[] = {
      [p](std::span<const double> v) {
        if (p == 1) return v[0] - v[1] * v[1];
        if (!(v[1] > 0)) return std::numeric_limits<double>::quiet_NaN();
        return v[0] - std::pow(v[1], 2 / p);
      },
      [k](std::span<const double> v) { return k * v[2]; }};
  const auto est = integ.estimate(
      3,
      [&](const Vec& x, std::span<double> out) {
        const double t = f.checked(x);
        out[0] = t * t;
        out[1] = detail::positive_power(f, x, t, p);
        out[2] = f.grad(x).squaredNorm() * pot.value(x);
      },
      combines);
  auto r = make_report(p == 1 ? InequalityId::poincare : InequalityId::beckner, est[0], est[1], integ);
  r.parameter = p;
  r.label = f.label;
  return r;
}

/// The same inequality through Φ_p applied to f^p. The report carries the
/// Theorem 1 constant 1/(2c(β−1)) times ∫Φ_p''(f^p)|∇f^p|²φ dμ.
inline InequalityReport check_beckner_via_phi_entropy(const Integrator& integ, double p, const ScalarField& f) {
  const ConvexMeasure& m = integ.measure();
  require_beckner_exponent(m, p);
  auto r = check_phi_entropy(integ, phi_power(p), fields::power(f, p));
  r.id = InequalityId::beckner;
  r.parameter = p;
  r.note = "phi_entropy route";
  return r;
}

struct SharpnessPoint {
  double epsilon = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  InequalityReport report;
};

/// Ratios lhs/rhs of the Beckner inequality for f = 1 + εg.
inline std::vector<SharpnessPoint> sharpness_probe_beckner(const Integrator& integ, double p, const ScalarField& g,
                                                          std::span<const double> epsilons) {
  const ConvexMeasure& m = integ.measure();
  require_beckner_exponent(m, p);
  const Estimate mean = integ.expectation([&g](const Vec& x) { return g.checked(x); });
  if (std::abs(mean.value) > 3 * mean.error + 1e-8) {
    std::ostringstream os;
    os << "sharpness probe needs a zero-mean direction, got mean " << mean.value << " +- " << mean.error;
    throw ContractViolation(os.str());
  }
  std::vector<SharpnessPoint> out;
  for (double eps : epsilons) {
    SharpnessPoint pt;
    pt.epsilon = eps;
    ScalarField f = fields::affine(g, eps, 1.0);
    if (p > 1 && eps != 0) f.range.lo = std::max(f.range.lo, 0.0);
    if (eps == 0) {
      pt.report = check_beckner(integ, p, fields::constant(m.dim(), 1.0));
      pt.report.verdict = Verdict::inconclusive;
      pt.report.note = "degenerate probe";
    } else {
      pt.report = check_beckner(integ, p, f);
      pt.ratio = pt.report.ratio;
    }
    pt.report.parameter = p;
    out.push_back(pt);
  }
  return out;
}

inline constexpr double kCovarianceExponentCap = 64;

/// |cov(g,h)| ≤ (1/(β−1))(∫|(D²φ)^{−1/p}∇g|^q φ dμ)^{1/q}(∫λ_min^{2−p}|(D²φ)^{−1/p}∇h|^p φ dμ)^{1/p}.
inline InequalityReport check_covariance(const Integrator& integ, const ScalarField& g, const ScalarField& h,
                                         double p) {
  const ConvexMeasure& m = integ.measure();
  const int n = m.dim();
  require_beta_above(m.beta(), n, n + 1.0, "covariance estimate", false);
  const double pt = p_beta_n(m.beta(), n);
  if (!(p >= 2 && p <= pt * (1 + 1e-12))) {
    std::ostringstream os;
    os << "covariance exponent p = " << p << " outside [2, p_beta_n] with p_beta_n = " << pt;
    throw ThresholdError(os.str(), pt);
  }
  std::string note;
  if (p > kCovarianceExponentCap) {
    std::ostringstream os;
    os << "p capped at " << kCovarianceExponentCap << " from " << p;
    note = os.str();
    p = kCovarianceExponentCap;
  }
  const double q = p / (p - 1);
  const auto& pot = m.potential();
  const double beta = m.beta();
  const Combine combines[] = {
      [](std::span<const double> v) { return std::abs(v[0] - v[1] * v[2]); },
      [=](std::span<const double> v) {
        return std::pow(std::max(v[3], 0.0), 1 / q) * std::pow(std::max(v[4], 0.0), 1 / p) / (beta - 1);
      }};
  const auto est = integ.estimate(
      5,
      [&](const Vec& x, std::span<double> out) {
        const double a = g.checked(x), b = h.checked(x);
        const Mat hess = pot.hessian(x);
        const auto es = sym_eig(hess);
        const double lmin = es.eigenvalues()(0);
        if (!(lmin > 0)) {
          std::ostringstream os;
          os << "potential Hessian is not positive definite at x = [" << x.transpose() << "]";
          throw DomainError(os.str());
        }
        const Vec d = es.eigenvalues().array().max(kEigenFloor).pow(-1.0 / p);
        const Mat w = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
        const double phi = pot.value(x);
        out[0] = a * b;
        out[1] = a;
        out[2] = b;
        out[3] = std::pow((w * g.grad(x)).norm(), q) * phi;
        out[4] = std::pow(lmin, 2 - p) * std::pow((w * h.grad(x)).norm(), p) * phi;
      },
      combines);
  auto r = make_report(InequalityId::covariance, est[0], est[1], integ);
  r.parameter = p;
  r.label = g.label + " / " + h.label;
  r.note = note;
  return r;
}

/// Beckner at p = p_β on μ_{φ_β,β} for each β, rescaled by 2/(2−p) so that
/// both sides approach Ent(f²) and (2/ρ)∫|∇f|² under e^{−ψ}.
inline std::vector<InequalityReport> limit_experiment_lsi(const ConvexPotential& psi, std::span<const double> betas,
                                                          const ScalarField& f, const IntegrationOptions& opts) {
  if (betas.empty()) throw ParameterError("limit experiment needs at least one beta");
  std::vector<InequalityReport> out;
  for (double beta : betas) {
    const ConvexMeasure m = make_limit_family(psi, beta, opts.method == Method::grid ? NormalizationMode::quadrature
                                                                                      : NormalizationMode::mc_only);
    const Integrator integ(m, opts);
    const double p = p_beta(beta, m.dim());
    InequalityReport r = check_beckner(integ, p, f);
    const double s = 2 / (2 - p);
    r.lhs *= s;
    r.lhs_err *= s;
    r.rhs *= s;
    r.rhs_err *= s;
    r.id = InequalityId::limit_lsi;
    r.verdict = classify(r.lhs, r.lhs_err, r.rhs, r.rhs_err, true);
    r.parameter = beta;
    std::ostringstream os;
    os << "p = " << p;
    r.note = os.str();
    out.push_back(r);
  }
  return out;
}

struct CclPoint {
  InequalityReport report;
  /// β/(β−1)·(∫|(D²ψ)^{−1/p}∇g|^q φ_β dμ_β)^{1/q}(∫λ_min(D²ψ)^{2−p}|(D²ψ)^{−1/p}∇h|^p φ_β dμ_β)^{1/p}.
  double prefactor_rhs = std::numeric_limits<double>::quiet_NaN();
};

/// Covariance estimate on μ_{φ_β,β} for each β, with the ψ-based
/// prefactor form β/(β−1)(…)^{1/q}(…)^{1/p} evaluated alongside.
inline std::vector<CclPoint> limit_experiment_ccl(const ConvexPotential& psi, std::span<const double> betas,
                                                  const ScalarField& g, const ScalarField& h, double p,
                                                  const IntegrationOptions& opts) {
  if (betas.empty()) throw ParameterError("limit experiment needs at least one beta");
  if (!(p >= 2) || !std::isfinite(p)) throw ParameterError("limit experiment needs finite p >= 2");
  std::vector<CclPoint> out;
  for (double beta : betas) {
    const ConvexMeasure m = make_limit_family(psi, beta, opts.method == Method::grid ? NormalizationMode::quadrature
                                                                                      : NormalizationMode::mc_only);
    const Integrator integ(m, opts);
    CclPoint pt;
    pt.report = check_covariance(integ, g, h, p);
    pt.report.id = InequalityId::limit_ccl;
    pt.report.verdict = classify(pt.report.lhs, pt.report.lhs_err, pt.report.rhs, pt.report.rhs_err, false);
    pt.report.parameter = beta;
    const double pe = std::min(p, kCovarianceExponentCap);
    const double q = pe / (pe - 1);
    const auto& phi = m.potential();
    const Combine combine = [=](std::span<const double> v) {
      return beta / (beta - 1) * std::pow(std::max(v[0], 0.0), 1 / q) * std::pow(std::max(v[1], 0.0), 1 / pe);
    };
    pt.prefactor_rhs = integ
                           .estimate(
                               2,
                               [&](const Vec& x, std::span<double> o) {
                                 const auto es = sym_eig(psi.hessian(x));
                                 const Vec d = es.eigenvalues().array().max(kEigenFloor).pow(-1.0 / pe);
                                 const Mat w = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
                                 const double ph = phi.value(x);
                                 o[0] = std::pow((w * g.grad(x)).norm(), q) * ph;
                                 o[1] = std::pow(es.eigenvalues()(0), 2 - pe) * std::pow((w * h.grad(x)).norm(), pe) * ph;
                               },
                               combine)
                           .value;
    out.push_back(pt);
  }
  return out;
}

}  // namespace convexineq

#endif  // CONVEXINEQ_INEQUALITY_CHECKS_HPP
