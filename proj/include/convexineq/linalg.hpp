#ifndef CONVEXINEQ_LINALG_HPP
#define CONVEXINEQ_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

#include "convexineq/errors.hpp"

namespace convexineq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Eigenvalues below this are clamped before fractional powers are taken.
inline constexpr double kEigenFloor = 1e-14;

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Symmetric eigendecomposition, eigenvalues ascending.
inline Eigen::SelfAdjointEigenSolver<Mat> sym_eig(const Mat& a) {
  if (!a.allFinite()) throw EvaluationError("non-finite matrix entries");
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es;
}

inline double min_eigenvalue(const Mat& a) { return sym_eig(a).eigenvalues()(0); }

/// A^s for symmetric positive definite A via eigendecomposition.
/// Throws ParameterError when A has an eigenvalue below -1e-12·‖A‖.
inline Mat spd_power(const Mat& a, double s) {
  auto es = sym_eig(a);
  Vec ev = es.eigenvalues();
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev(0) < -1e-12 * scale) {
    throw ParameterError("matrix is not positive definite (min eigenvalue " +
                         std::to_string(ev(0)) + ")");
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::pow(std::max(ev(i), kEigenFloor), s);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double hs_norm(const Mat& h) { return h.norm(); }

/// Central-difference step used by every finite-difference fallback.
inline double fd_step(const Vec& x, double rel = 1e-5) { return rel * (1.0 + x.norm()); }

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double rel = 1e-5) {
  const double h = fd_step(x, rel);
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
    xp(i) = xm(i) = x(i);
  }
  return g;
}

/// Jacobian of a vector field by central differences, symmetrized.
inline Mat fd_jacobian_sym(const std::function<Vec(const Vec&)>& g, const Vec& x,
                           double rel = 1e-5) {
  const double h = fd_step(x, rel);
  const auto n = x.size();
  Mat j(n, n);
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    j.col(i) = (g(xp) - g(xm)) / (2 * h);
    xp(i) = xm(i) = x(i);
  }
  return 0.5 * (j + j.transpose());
}

/// Divergence of a vector field by central differences.
inline double fd_divergence(const std::function<Vec(const Vec&)>& g, const Vec& x,
                            double rel = 1e-5) {
  const double h = fd_step(x, rel);
  double div = 0;
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    div += (g(xp)(i) - g(xm)(i)) / (2 * h);
    xp(i) = xm(i) = x(i);
  }
  return div;
}

}  // namespace convexineq

#endif  // CONVEXINEQ_LINALG_HPP
