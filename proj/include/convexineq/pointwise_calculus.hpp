#ifndef CONVEXINEQ_POINTWISE_CALCULUS_HPP
#define CONVEXINEQ_POINTWISE_CALCULUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/generator.hpp"
#include "convexineq/linalg.hpp"
#include "convexineq/parallel.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq {

struct ClaimInstance {
  int n = 2;
  double beta = 3;
  double p = 2;
  Vec lambdas;
  Vec a;

  void validate() const {
    if (n < 1) throw ParameterError("claim dimension must be positive");
    if (lambdas.size() != n || a.size() != n) throw ParameterError("claim vectors must have length n");
    if ((a.array() < -1e-12).any() || std::abs(a.sum() - 1) > 1e-12) {
      throw ParameterError("claim weights must lie on the simplex");
    }
    if (!(p >= 2)) throw ParameterError("claim exponent must satisfy p >= 2");
    require_beta_above(beta, n, n + 1.0, "claim", false);
  }
};

/// F(a) = (β−1)Σλ² − (Σλ)² + (p−2)((β−1)Σλ²a − (Σλ)(Σλa)).
inline double claim_F(const ClaimInstance& c) {
  c.validate();
  const double s1 = c.lambdas.sum();
  const double s2 = c.lambdas.squaredNorm();
  const double s2a = c.lambdas.cwiseAbs2().dot(c.a);
  const double s1a = c.lambdas.dot(c.a);
  return (c.beta - 1) * s2 - s1 * s1 + (c.p - 2) * ((c.beta - 1) * s2a - s1 * s1a);
}

/// F at the simplex vertex e_i without validation.
inline double claim_F_vertex(double beta, double p, const Vec& lambda, int i) {
  const double s1 = lambda.sum();
  const double s2 = lambda.squaredNorm();
  return (beta - 1) * s2 - s1 * s1 + (p - 2) * ((beta - 1) * lambda(i) * lambda(i) - s1 * lambda(i));
}

struct ClaimResult {
  bool holds = true;
  double threshold = kInf;
  /// min over trials of F / Σλ² at the simplex vertices.
  double min_F = kInf;
  Vec witness_lambda;
  int witness_vertex = 0;
  std::int64_t evaluations = 0;
};

namespace detail {

inline void claim_record(ClaimResult& r, double beta, double p, const Vec& lambda) {
  const double scale = lambda.squaredNorm();
  if (!(scale > 0)) return;
  for (int i = 0; i < lambda.size(); ++i) {
    const double f = claim_F_vertex(beta, p, lambda, i) / scale;
    ++r.evaluations;
    if (f < r.min_F) {
      r.min_F = f;
      r.witness_lambda = lambda;
      r.witness_vertex = i;
    }
  }
}

/// λ_0 = cos θ, λ_i = sin θ for i ≥ 1.
inline Vec extremal_lambda(int n, double theta) {
  Vec l = Vec::Constant(n, std::sin(theta));
  l(0) = std::cos(theta);
  return l;
}

}  // namespace detail

/// Randomized search for a simplex vertex and eigenvalue vector with F < 0.
/// Random trials use standard normal λ; the adversarial set adds axis
/// patterns and the extremal family λ = (t, s, …, s), refined by golden
/// section in the angle of (t, s).
inline ClaimResult claim_holds(int n, double beta, double p, std::int64_t trials, std::uint64_t seed,
                               double tol = 1e-9) {
  require_beta_above(beta, n, n + 1.0, "claim", false);
  if (!(p >= 2)) throw ParameterError("claim exponent must satisfy p >= 2");
  if (trials < 0) throw ParameterError("trial count must be nonnegative");
  ClaimResult r;
  r.threshold = p_beta_n(beta, n);
  if (n == 1) {
    Vec one = Vec::Ones(1);
    detail::claim_record(r, beta, p, one);
    r.holds = r.min_F >= -tol;
    return r;
  }

  constexpr std::int64_t kPerShard = 4096;
  const int shards = static_cast<int>((trials + kPerShard - 1) / kPerShard);
  std::vector<ClaimResult> parts(shards);
  parallel_for(shards, [&](int s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t lo = s * kPerShard, hi = std::min(trials, lo + kPerShard);
    Vec l(n);
    for (std::int64_t t = lo; t < hi; ++t) {
      for (int i = 0; i < n; ++i) l(i) = normal(rng);
      detail::claim_record(parts[s], beta, p, l);
    }
  });
  for (const auto& part : parts) {
    r.evaluations += part.evaluations;
    if (part.min_F < r.min_F) {
      r.min_F = part.min_F;
      r.witness_lambda = part.witness_lambda;
      r.witness_vertex = part.witness_vertex;
    }
  }

  for (int i = 0; i < n; ++i) detail::claim_record(r, beta, p, Vec::Unit(n, i));
  detail::claim_record(r, beta, p, Vec::Ones(n));
  Vec alt(n);
  for (int i = 0; i < n; ++i) alt(i) = i % 2 == 0 ? 1.0 : -1.0;
  detail::claim_record(r, beta, p, alt);

  auto g = [&](double theta) {
    const Vec l = detail::extremal_lambda(n, theta);
    return claim_F_vertex(beta, p, l, 0) / l.squaredNorm();
  };
  const double pi = std::numbers::pi;
  constexpr int kAngles = 3600;
  double best = kInf, best_theta = 0;
  for (int k = 0; k < kAngles; ++k) {
    const double th = -pi / 2 + pi * k / kAngles;
    const double v = g(th);
    if (v < best) {
      best = v;
      best_theta = th;
    }
  }
  double a = best_theta - pi / kAngles, b = best_theta + pi / kAngles;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - gr * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + gr * (b - a);
      gd = g(d);
    }
  }
  detail::claim_record(r, beta, p, detail::extremal_lambda(n, best_theta));
  detail::claim_record(r, beta, p, detail::extremal_lambda(n, 0.5 * (a + b)));

  r.holds = r.min_F >= -tol;
  return r;
}

struct BoundCheck {
  double lhs = 0;
  double rhs = 0;
  bool holds = true;

  double gap() const { return rhs - lhs; }
};

inline BoundCheck make_check(double lhs, double rhs, double rel = 1e-12) {
  return {lhs, rhs, lhs <= rhs + rel * std::max({1.0, std::abs(lhs), std::abs(rhs)})};
}

inline void require_symmetric(const Mat& h) {
  if (h.rows() != h.cols()) throw ParameterError("matrix must be square");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw ParameterError("matrix must be symmetric");
  }
}

/// (tr H)² ≤ n‖H‖²_HS.
inline BoundCheck laplacian_hs_bound(const Mat& h) {
  require_symmetric(h);
  const double tr = h.trace();
  return make_check(tr * tr, h.rows() * h.squaredNorm());
}

/// |(4(β−1)/(β−2))⟨Hv,v⟩ − tr H/(β−2)| ≤ √((4β−5)² + n − 1)/(β−2)·‖H‖_HS.
/// This is Cauchy–Schwarz against 4(β−1)vvᵀ − I, so any β > 2 is allowed.
inline BoundCheck mixed_term_bound(const Mat& h, const Vec& v, double beta) {
  require_symmetric(h);
  const int n = static_cast<int>(h.rows());
  if (v.size() != n) throw ParameterError("vector length does not match the matrix");
  if (std::abs(v.norm() - 1) > 1e-10) throw ParameterError("mixed term bound needs a unit vector");
  if (!(beta > 2) || !std::isfinite(beta)) throw OutOfRangeError("mixed term bound needs finite beta > 2");
  const double lhs = std::abs(4 * (beta - 1) / (beta - 2) * v.dot(h * v) - h.trace() / (beta - 2));
  const double k = 4 * beta - 5;
  return make_check(lhs, std::sqrt(k * k + n - 1) / (beta - 2) * hs_norm(h));
}

struct MatrixPowerCheck {
  /// p log|A^{1/p}v| against (p−2)log|v| + 2 log|A^{1/2}v|.
  double log_lhs = 0;
  double log_rhs = 0;
  bool holds = true;
  /// |v| ≤ λ_min(A)^{−1/p}|A^{1/p}v|, in log form.
  double log_norm = 0;
  double log_min_bound = 0;
  bool holds_min_eigen = true;
};

/// |A^{1/p}v|^p ≤ |v|^{p−2}|A^{1/2}v|² and |v| ≤ λ_min(A)^{−1/p}|A^{1/p}v|.
inline MatrixPowerCheck matrix_power_bound(const Mat& a, const Vec& v, double p, double tol = 1e-10) {
  require_symmetric(a);
  if (v.size() != a.rows()) throw ParameterError("vector length does not match the matrix");
  if (!(v.norm() > 0)) throw ParameterError("matrix power bound needs a nonzero vector");
  if (!(p >= 2) || !std::isfinite(p)) throw ParameterError("matrix power bound needs finite p >= 2");
  const auto es = sym_eig(a);
  const double lmin = es.eigenvalues()(0);
  if (!(lmin > 0)) throw ParameterError("matrix power bound needs a positive definite matrix");
  auto power_apply = [&](double s) {
    const Vec d = es.eigenvalues().array().max(kEigenFloor).pow(s);
    return Vec(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose() * v);
  };
  MatrixPowerCheck r;
  const double n_ap = power_apply(1.0 / p).norm();
  r.log_lhs = p * std::log(n_ap);
  r.log_rhs = (p - 2) * std::log(v.norm()) + 2 * std::log(power_apply(0.5).norm());
  r.holds = r.log_lhs <= r.log_rhs + tol;
  r.log_norm = std::log(v.norm());
  r.log_min_bound = -std::log(lmin) / p + std::log(n_ap);
  r.holds_min_eigen = r.log_norm <= r.log_min_bound + tol;
  return r;
}

/// Γ(f, g) = ½(L(fg) − fLg − gLf) at x, from the continuum operator.
inline double carre_du_champ(const ConvexMeasure& m, const ScalarField& f, const ScalarField& g, const Vec& x) {
  const ScalarField fg = fields::product(f, g);
  return 0.5 * (continuum_apply(m, fg, x) - f.value(x) * continuum_apply(m, g, x) -
                g.value(x) * continuum_apply(m, f, x));
}

struct Gamma2Result {
  double definitional = 0;  // ½(LΓ(f) − 2Γ(f, Lf))
  double bochner = 0;       // ‖D²f‖²_HS + ⟨D²ψ∇f, ∇f⟩
  double gamma = 0;         // |∇f|²
  double rho = 0;           // λ_min(D²ψ(x))
  bool curvature_holds = true;
};

/// Γ₂ for L = Δ − ⟨∇ψ, ∇·⟩ at x, by definition and by Bochner's formula.
inline Gamma2Result gamma2_logconcave(const ConvexPotential& psi, const ScalarField& f, const Vec& x) {
  const int n = psi.dim;
  if (f.dim != n || x.size() != n) throw ParameterError("dimension mismatch in gamma2");
  // ∇Γ(f) = 2 D²f ∇f; its divergence needs third derivatives.
  auto grad_gamma = [&f](const Vec& y) -> Vec { return 2.0 * f.hess(y) * f.grad(y); };
  const double lap_gamma = fd_divergence(grad_gamma, x, 1e-4);
  const Vec gpsi = psi.gradient(x);
  const Mat hpsi = psi.hessian(x);
  const Vec gf = f.grad(x);
  const Mat hf = f.hess(x);
  const double l_gamma = lap_gamma - gpsi.dot(grad_gamma(x));

  // ∇(Lf) = ∇Δf − D²ψ∇f − D²f∇ψ.
  const double h = fd_step(x, 1e-4);
  Vec grad_lap(n);
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    grad_lap(i) = (f.laplacian(xp) - f.laplacian(xm)) / (2 * h);
  }
  const Vec grad_lf = grad_lap - hpsi * gf - hf * gpsi;

  Gamma2Result r;
  r.definitional = 0.5 * l_gamma - gf.dot(grad_lf);
  r.bochner = hf.squaredNorm() + gf.dot(hpsi * gf);
  r.gamma = gf.squaredNorm();
  r.rho = min_eigenvalue(hpsi);
  r.curvature_holds = r.definitional >= r.rho * r.gamma - 1e-6 * std::max(1.0, std::abs(r.definitional));
  return r;
}

/// Number of failing trials; trials shard over workers with derived seeds.
inline std::int64_t count_failures(std::int64_t trials, std::uint64_t seed,
                                   const std::function<bool(std::mt19937_64&)>& trial) {
  constexpr std::int64_t kPerShard = 4096;
  const int shards = static_cast<int>((trials + kPerShard - 1) / kPerShard);
  std::vector<std::int64_t> fails(shards, 0);
  parallel_for(shards, [&](int s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    const std::int64_t lo = s * kPerShard, hi = std::min(trials, lo + kPerShard);
    for (std::int64_t t = lo; t < hi; ++t) fails[s] += trial(rng) ? 0 : 1;
  });
  std::int64_t total = 0;
  for (auto f : fails) total += f;
  return total;
}

/// Standard normal entries, symmetrized.
inline Mat random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  return 0.5 * (g + g.transpose());
}

/// Q diag(e^{s}) Qᵀ with s uniform in [−4, 4] and Q from a QR of a Gaussian matrix.
inline Mat random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
  Vec d(n);
  for (int i = 0; i < n; ++i) d(i) = std::exp(unif(rng));
  Mat a = q * d.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

inline Vec random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
  } while (!(v.norm() > 1e-12));
  return v / v.norm();
}

}  // namespace convexineq

#endif  // CONVEXINEQ_POINTWISE_CALCULUS_HPP
