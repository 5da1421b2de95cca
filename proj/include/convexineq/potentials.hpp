#ifndef CONVEXINEQ_POTENTIALS_HPP
#define CONVEXINEQ_POTENTIALS_HPP

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/grid.hpp"
#include "convexineq/linalg.hpp"

namespace convexineq {

/// A positive, strictly convex C² potential φ on R^n.
struct ConvexPotential {
  int dim = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  /// Declared lower bound on the Hessian spectrum; 0 when unknown.
  double convexity_constant = 0.0;
  std::string label;
};

/// φ(x) = 1 + |x|².
inline ConvexPotential cauchy_potential(int n) {
  if (n < 1) throw ParameterError("dimension must be positive");
  ConvexPotential p;
  p.dim = n;
  p.value = [](const Vec& x) { return 1.0 + x.squaredNorm(); };
  p.gradient = [](const Vec& x) -> Vec { return 2.0 * x; };
  p.hessian = [n](const Vec&) -> Mat { return 2.0 * Mat::Identity(n, n); };
  p.convexity_constant = 2.0;
  p.label = "cauchy";
  return p;
}

/// φ(x) = offset + ⟨Ax, x⟩ for symmetric positive definite A.
inline ConvexPotential quadratic_potential(const Mat& a, double offset = 1.0) {
  if (a.rows() != a.cols() || a.rows() < 1) throw ParameterError("quadratic potential needs a square matrix");
  if (!((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff())))
    throw ParameterError("quadratic potential matrix must be symmetric");
  if (!(offset > 0)) throw ParameterError("quadratic potential offset must be positive");
  const double lmin = min_eigenvalue(a);
  if (!(lmin > 0)) throw ParameterError("quadratic potential matrix must be positive definite");
  ConvexPotential p;
  p.dim = static_cast<int>(a.rows());
  p.value = [a, offset](const Vec& x) { return offset + x.dot(a * x); };
  p.gradient = [a](const Vec& x) -> Vec { return 2.0 * (a * x); };
  p.hessian = [a](const Vec&) -> Mat { return 2.0 * a; };
  p.convexity_constant = 2.0 * lmin;
  p.label = "quadratic";
  return p;
}

/// ψ(x) = ρ|x|²/2 + (n/2)·ln(2π/ρ), so that ∫e^{-ψ} = 1 and D²ψ = ρ·I.
inline ConvexPotential gaussian_psi(int n, double rho = 1.0) {
  if (n < 1) throw ParameterError("dimension must be positive");
  if (!(rho > 0)) throw ParameterError("rho must be positive");
  const double shift = 0.5 * n * std::log(2.0 * std::numbers::pi / rho);
  ConvexPotential p;
  p.dim = n;
  p.value = [rho, shift](const Vec& x) { return 0.5 * rho * x.squaredNorm() + shift; };
  p.gradient = [rho](const Vec& x) -> Vec { return rho * x; };
  p.hessian = [n, rho](const Vec&) -> Mat { return rho * Mat::Identity(n, n); };
  p.convexity_constant = rho;
  p.label = "gaussian_psi";
  return p;
}

/// Potential from a value evaluator only. The gradient uses central
/// differences with step 1e-5·(1+|x|); the Hessian differences that gradient
/// with step 1e-4·(1+|x|).
inline ConvexPotential potential_from_value(int n, std::function<double(const Vec&)> value,
                                            double convexity_constant, std::string label) {
  ConvexPotential p;
  p.dim = n;
  p.value = value;
  p.gradient = [value](const Vec& x) -> Vec { return fd_gradient(value, x, 1e-5); };
  p.hessian = [value](const Vec& x) -> Mat {
    auto grad = [&value](const Vec& y) -> Vec { return fd_gradient(value, y, 1e-5); };
    return fd_jacobian_sym(grad, x, 1e-4);
  };
  p.convexity_constant = convexity_constant;
  p.label = std::move(label);
  return p;
}

/// φ_β = 1 + ψ/β with convexity constant ρ/β.
inline ConvexPotential limit_potential(const ConvexPotential& psi, double beta) {
  if (!(beta > 0)) throw ParameterError("beta must be positive");
  ConvexPotential p;
  p.dim = psi.dim;
  auto v = psi.value;
  auto g = psi.gradient;
  auto h = psi.hessian;
  p.value = [v, beta](const Vec& x) { return 1.0 + v(x) / beta; };
  p.gradient = [g, beta](const Vec& x) -> Vec { return g(x) / beta; };
  p.hessian = [h, beta](const Vec& x) -> Mat { return h(x) / beta; };
  p.convexity_constant = psi.convexity_constant / beta;
  p.label = "limit(" + psi.label + ")";
  return p;
}

/// Smallest eigenvalue of D²φ(x).
inline double min_hessian_eigenvalue(const ConvexPotential& p, const Vec& x) {
  const Mat h = p.hessian(x);
  if (!h.allFinite()) throw EvaluationError("non-finite Hessian entries");
  return min_eigenvalue(h);
}

struct ConvexityDiagnostics {
  double min_value = std::numeric_limits<double>::infinity();
  double max_asymmetry = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  bool ok = true;
};

/// Spot-checks positivity, Hessian symmetry (1e-10) and the declared
/// convexity constant (slack 1e-8) at the given points.
inline ConvexityDiagnostics diagnose(const ConvexPotential& p, const std::vector<Vec>& points) {
  ConvexityDiagnostics d;
  for (const auto& x : points) {
    d.min_value = std::min(d.min_value, p.value(x));
    const Mat h = p.hessian(x);
    d.max_asymmetry = std::max(d.max_asymmetry, (h - h.transpose()).cwiseAbs().maxCoeff());
    d.min_eigenvalue = std::min(d.min_eigenvalue, min_eigenvalue(0.5 * (h + h.transpose())));
  }
  d.ok = d.min_value > 0 && d.max_asymmetry <= 1e-10 &&
         d.min_eigenvalue >= p.convexity_constant - 1e-8;
  return d;
}

enum class MeasureKind { cauchy, quadratic, limit_family, custom };
enum class NormalizationMode { quadrature, mc_only };

inline std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::cauchy: return "cauchy";
    case MeasureKind::quadratic: return "quadratic";
    case MeasureKind::limit_family: return "limit_family";
    case MeasureKind::custom: return "custom";
  }
  return "custom";
}

namespace detail {

inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Smallest radius whose estimated outside-ball mass is below tol. The tail
/// is bounded from the local radial decay exponent k of the density along
/// axis and diagonal rays: mass ≲ |S^{n-1}| r^n ρ(r) / (k − n).
inline double tail_radius(int n, const std::function<double(const Vec&)>& log_unnorm,
                          double log_z, double tol) {
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (n >= 2) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vec d(n);
      for (int i = 0; i < n; ++i) d(i) = (mask >> i) & 1 ? 1.0 : -1.0;
      dirs.push_back(d / std::sqrt(double(n)));
    }
  }
  const double log_area = std::log(sphere_area(n));
  const double factor = 1.05;
  for (double r = 1.0; r < 1e6; r *= factor) {
    double kmin = std::numeric_limits<double>::infinity();
    double lmax = -std::numeric_limits<double>::infinity();
    for (const auto& u : dirs) {
      const double l1 = log_unnorm(r * u);
      const double l2 = log_unnorm(factor * r * u);
      kmin = std::min(kmin, -(l2 - l1) / std::log(factor));
      lmax = std::max(lmax, l1);
    }
    if (kmin > n + 0.5) {
      const double log_tail = log_area + n * std::log(r) + lmax - std::log(kmin - n) - log_z;
      if (log_tail < std::log(tol)) return r;
    }
  }
  throw ParameterError("density tail too heavy to truncate at the requested mass");
}

inline QuadratureGrid default_grid(int n, double radius, double length_scale) {
  static constexpr double kStep[] = {0.05, 0.1, 0.25};
  static constexpr int kMaxPoints[] = {40001, 2001, 401};
  const int d = std::min(n, 3) - 1;
  const double h = std::min(kStep[d], length_scale / 10.0);
  int m = static_cast<int>(std::ceil(radius / h));
  int ppd = std::min(2 * m + 1, kMaxPoints[d]);
  return QuadratureGrid::make(n, radius, std::max(ppd, 3));
}

}  // namespace detail

/// Probability measure dμ = φ^{-β}/Z dx. Immutable; Z is computed once at
/// construction together with an error estimate and the working radius.
class ConvexMeasure {
 public:
  static constexpr double kTailMass = 1e-8;

  ConvexMeasure(ConvexPotential potential, double beta, MeasureKind kind,
                NormalizationMode mode = NormalizationMode::quadrature,
                std::optional<double> radius = std::nullopt)
      : potential_(std::move(potential)), beta_(beta), kind_(kind) {
    if (!(beta_ > 0) || !std::isfinite(beta_)) throw ParameterError("beta must be positive and finite");
    if (!potential_.value || !potential_.gradient || !potential_.hessian)
      throw ParameterError("potential is missing an evaluator");
    const int n = potential_.dim;
    const Vec origin = Vec::Zero(n);
    const double phi0 = potential_.value(origin);
    if (!(phi0 > 0)) throw DomainError("potential is not positive at the origin");
    log_ref_ = -beta_ * std::log(phi0);
    const double lmax = sym_eig(potential_.hessian(origin)).eigenvalues().maxCoeff();
    length_scale_ = lmax > 0 ? std::sqrt(phi0 / lmax) : 1.0;

    if (radius && !(*radius > 0)) throw ParameterError("working radius must be positive");
    radius_ = radius.value_or(0.0);
    if (mode == NormalizationMode::mc_only) return;
    if (kind_ == MeasureKind::cauchy) {
      normalize_cauchy();
      if (!radius) radius_ = final_radius();
      return;
    }
    if (n > 3) throw UnsupportedError("quadrature normalization supports n <= 3 only");
    normalize_on_grid();
    if (!radius) {
      // Z came from a provisional radius; redo it on the final one.
      radius_ = final_radius();
      normalize_on_grid();
    }
  }

  const ConvexPotential& potential() const { return potential_; }
  double beta() const { return beta_; }
  int dim() const { return potential_.dim; }
  MeasureKind kind() const { return kind_; }
  bool normalized() const { return normalized_; }
  double normalization() const { return std::exp(log_z_); }
  double log_normalization() const { return log_z_; }
  double normalization_error() const { return z_error_; }
  double working_radius() const { return radius_; }
  double convexity_constant() const { return potential_.convexity_constant; }
  double length_scale() const { return length_scale_; }

  /// ln φ(x)^{-β}; throws DomainError if φ(x) ≤ 0.
  double log_unnormalized(const Vec& x) const {
    const double phi = potential_.value(x);
    if (!(phi > 0)) {
      std::ostringstream os;
      os << "potential is not positive at x = [" << x.transpose() << "]";
      throw DomainError(os.str());
    }
    return -beta_ * std::log(phi);
  }

  double log_density(const Vec& x) const {
    require_normalized();
    return log_unnormalized(x) - log_z_;
  }
  double density(const Vec& x) const { return std::exp(log_density(x)); }

  QuadratureGrid default_grid() const {
    require_normalized();
    return detail::default_grid(dim(), radius_, length_scale_);
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(kind_) << "(n=" << dim() << ",beta=" << beta_ << ")";
    return os.str();
  }

  void require_normalized() const {
    if (!normalized_) throw StateError("measure " + describe() + " has no normalization constant");
  }

 private:
  double final_radius() const {
    return detail::tail_radius(dim(), [this](const Vec& x) { return log_unnormalized(x); }, log_z_,
                               kTailMass);
  }

  void normalize_cauchy() {
    const int n = potential_.dim;
    if (!(beta_ > 0.5 * n)) throw ParameterError("generalized Cauchy measure needs beta > n/2");
    if (n == 1) {
      log_z_ = 0.5 * std::log(std::numbers::pi) + std::lgamma(beta_ - 0.5) - std::lgamma(beta_);
      z_error_ = 1e-15 * std::exp(log_z_);
    } else if (n <= 3) {
      // Radial reduction with r = tan θ: ∫ sin^{n-1}θ cos^{2β-n-1}θ dθ on (0, π/2).
      boost::math::quadrature::tanh_sinh<double> integrator;
      const double e = 2.0 * beta_ - n - 1.0;
      auto f = [n, e](double t) { return std::pow(std::sin(t), n - 1) * std::pow(std::cos(t), e); };
      double err = 0;
      const double radial = integrator.integrate(f, 0.0, std::numbers::pi / 2, 1e-13, &err);
      const double area = detail::sphere_area(n);
      log_z_ = std::log(area * radial);
      z_error_ = area * std::max(err, 1e-15 * radial);
    } else {
      throw UnsupportedError("quadrature normalization supports n <= 3 only; use mc_only mode");
    }
    normalized_ = true;
  }

  void normalize_on_grid() {
    const int n = potential_.dim;
    double r = radius_;
    if (!(r > 0)) {
      // Provisional radius from the density at the origin standing in for Z.
      r = detail::tail_radius(n, [this](const Vec& x) { return log_unnormalized(x); }, log_ref_, kTailMass);
    }
    const QuadratureGrid grid = detail::default_grid(n, r, length_scale_);
    const GridSums sums = accumulate_grid(
        grid, 0, [this](const Vec& x) { return std::exp(log_unnormalized(x) - log_ref_); },
        [](const Vec&, std::vector<double>&) {});
    const double hv = grid.cell_volume();
    const double z_full = sums.mass_full * hv;
    const double z_coarse = sums.mass_coarse * hv * std::pow(2.0, n);
    const double z_inner = sums.mass_inner * hv;
    if (!(z_full > 0) || !std::isfinite(z_full)) throw NumericError("normalization quadrature failed");
    log_z_ = std::log(z_full) + log_ref_;
    z_error_ = (std::abs(z_full - z_coarse) + std::abs(z_full - z_inner) + 1e-15 * z_full) *
               std::exp(log_ref_);
    radius_ = r;
    normalized_ = true;
  }

  ConvexPotential potential_;
  double beta_;
  MeasureKind kind_;
  bool normalized_ = false;
  double log_z_ = std::numeric_limits<double>::quiet_NaN();
  double z_error_ = std::numeric_limits<double>::quiet_NaN();
  double radius_ = 0.0;
  double log_ref_ = 0.0;
  double length_scale_ = 1.0;
};

/// Generalized Cauchy measure (1 + |x|²)^{-β}/Z, β > n/2. Z is closed form for
/// n = 1 and a radial quadrature for n ∈ {2, 3}.
inline ConvexMeasure make_cauchy(int n, double beta,
                                 NormalizationMode mode = NormalizationMode::quadrature) {
  if (n < 1) throw ParameterError("dimension must be positive");
  if (!(beta > 0.5 * n)) throw ParameterError("generalized Cauchy measure needs beta > n/2");
  if (n > 3 && mode == NormalizationMode::quadrature)
    throw UnsupportedError("quadrature normalization supports n <= 3 only; use mc_only mode");
  return ConvexMeasure(cauchy_potential(n), beta, MeasureKind::cauchy, mode);
}

inline ConvexMeasure make_quadratic(const Mat& a, double beta, double offset = 1.0,
                                    NormalizationMode mode = NormalizationMode::quadrature) {
  auto p = quadratic_potential(a, offset);
  const int n = p.dim;
  if (!(beta > 0.5 * n)) throw ParameterError("quadratic measure needs beta > n/2");
  return ConvexMeasure(std::move(p), beta, MeasureKind::quadratic, mode);
}

/// μ_{φ_β, β} with φ_β = 1 + ψ/β. Throws DomainError if φ_β ≤ 0 anywhere on
/// the working domain.
inline ConvexMeasure make_limit_family(const ConvexPotential& psi, double beta,
                                       NormalizationMode mode = NormalizationMode::quadrature) {
  return ConvexMeasure(limit_potential(psi, beta), beta, MeasureKind::limit_family, mode);
}

}  // namespace convexineq

#endif  // CONVEXINEQ_POTENTIALS_HPP
