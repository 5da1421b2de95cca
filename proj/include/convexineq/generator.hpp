#ifndef CONVEXINEQ_GENERATOR_HPP
#define CONVEXINEQ_GENERATOR_HPP

#include <lapacke.h>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/linalg.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq {

using SpMat = Eigen::SparseMatrix<double>;

struct GeneratorSpec {
  int points_per_dim = 2001;
  std::optional<double> radius;  // nullopt = measure working radius
};

/// Generalized eigenpairs of (stiffness, mass), eigenvalues ascending.
/// Vectors are returned in function space and are mass-orthonormal.
struct Spectrum {
  Vec values;
  Mat vectors;
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<double> alpha;
  std::vector<double> alpha_prime;
  std::vector<double> bound;  // e^{−2c(β−1)t} α'(0)
  double decay_fit_rate = 0.0;
  bool bound_holds = true;
};

/// Form-based discretization of L = φΔ − (β−1)⟨∇φ, ∇·⟩ on the node grid
/// x_i = −R + ih of [−R, R]^n, n ∈ {1, 2}. The Dirichlet form has edge
/// weights φμ(x_{i+1/2})h^{n−2}; the mass is μ(x_i)h^n. Both are scaled so
/// the mass sums to 1. Lf = −M⁻¹Kf, with zero-flux boundary.
class DiscreteGenerator {
 public:
  static constexpr int kDenseLimit1d = 4000;
  static constexpr int kDenseLimit2d = 1600;

  DiscreteGenerator(const ConvexMeasure& m, GeneratorSpec spec)
      : dim_(m.dim()), n_(spec.points_per_dim), beta_(m.beta()), c_(m.convexity_constant()) {
    if (dim_ > 2) throw UnsupportedError("generator discretization supports n = 1 and n = 2 only");
    if (n_ < 3) throw ParameterError("generator needs at least 3 points per axis");
    m.require_normalized();
    radius_ = spec.radius.value_or(m.working_radius());
    if (!(radius_ > 0)) throw ParameterError("generator radius must be positive");
    h_ = 2 * radius_ / (n_ - 1);
    assemble(m);
  }

  int dim() const { return dim_; }
  int points_per_dim() const { return n_; }
  int size() const { return static_cast<int>(mass_.size()); }
  double radius() const { return radius_; }
  double step() const { return h_; }
  double beta() const { return beta_; }
  double convexity_constant() const { return c_; }
  const SpMat& stiffness() const { return k_; }
  const Vec& mass() const { return mass_; }

  Vec node(int idx) const {
    Vec x(dim_);
    if (dim_ == 1) {
      x(0) = coord(idx);
    } else {
      x(0) = coord(idx / n_);
      x(1) = coord(idx % n_);
    }
    return x;
  }

  /// Field values at the nodes.
  Vec sample(const ScalarField& f) const {
    Vec v(size());
    for (int i = 0; i < size(); ++i) v(i) = f.value(node(i));
    return v;
  }

  Vec apply(const Vec& f) const { return -(k_ * f).cwiseQuotient(mass_); }

  double mean(const Vec& f) const { return mass_.dot(f); }
  double inner(const Vec& f, const Vec& g) const { return f.cwiseProduct(mass_).dot(g); }
  double energy(const Vec& f, const Vec& g) const { return f.dot(k_ * g); }
  double variance(const Vec& f) const {
    const double mu = mean(f);
    return inner(f, f) - mu * mu;
  }

  /// |⟨f, g⟩_M| / (‖f‖_M ‖g‖_M) after removing means.
  double correlation(const Vec& f, const Vec& g) const {
    const Vec a = f.array() - mean(f), b = g.array() - mean(g);
    return std::abs(inner(a, b)) / std::sqrt(inner(a, a) * inner(b, b));
  }

  const Spectrum& spectrum() const {
    std::call_once(cache_->once, [this] { cache_->spectrum = compute_spectrum(); });
    return cache_->spectrum;
  }

  bool dense_spectrum() const { return size() <= (dim_ == 1 ? kDenseLimit1d : kDenseLimit2d); }

  /// Smallest nonzero eigenvalue of −L.
  double spectral_gap() const { return dense_spectrum() ? spectrum().values(1) : lowest_modes(2).values(0); }

  /// Eigenfunction of the gap.
  Vec gap_eigenfunction() const {
    return dense_spectrum() ? Vec(spectrum().vectors.col(1)) : Vec(lowest_modes(2).vectors.col(0));
  }

  /// The k smallest nonzero eigenpairs by block inverse iteration on the
  /// mass-orthogonal complement of constants, with Rayleigh–Ritz.
  Spectrum lowest_modes(int k, double tol = 1e-12, int max_iter = 2000) const {
    const int m = size();
    if (k < 1 || k + 1 >= m) throw ParameterError("requested mode count out of range");
    const int block = k + 2;
    const double shift = 1.0;
    const SpMat a = k_ + shift * SpMat(mass_.asDiagonal());
    Eigen::SimplicialLDLT<SpMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw NumericError("shifted factorization failed");
    Mat x(m, block);
    for (int j = 0; j < block; ++j) {
      for (int i = 0; i < m; ++i) x(i, j) = std::cos((j + 1) * 0.37 * i + 0.1 * j) + 1e-3 * ((i * (j + 3)) % 7);
    }
    auto deflate_orthonormalize = [&](Mat& y) {
      for (int j = 0; j < y.cols(); ++j) {
        y.col(j).array() -= mean(y.col(j));
        for (int l = 0; l < j; ++l) y.col(j) -= inner(y.col(l), y.col(j)) * y.col(l);
        const double nrm = std::sqrt(inner(y.col(j), y.col(j)));
        if (!(nrm > 0)) throw NumericError("inverse iteration lost rank");
        y.col(j) /= nrm;
      }
    };
    deflate_orthonormalize(x);
    Vec prev = Vec::Constant(k, kInf);
    Spectrum sp;
    for (int iter = 0; iter < max_iter; ++iter) {
      Mat y = ldlt.solve(mass_.asDiagonal() * x);
      deflate_orthonormalize(y);
      const Mat ky = Mat(k_ * y);
      Mat small = y.transpose() * ky;
      small = 0.5 * (small + small.transpose());
      Eigen::SelfAdjointEigenSolver<Mat> es(small);
      x = y * es.eigenvectors();
      const Vec vals = es.eigenvalues().head(k);
      sp.values = vals;
      if (((vals - prev).cwiseAbs().array() <= tol * vals.cwiseAbs().array().max(1.0)).all()) break;
      prev = vals;
    }
    sp.vectors = x.leftCols(k);
    return sp;
  }

  /// P_t f0 for each requested time.
  std::vector<Vec> evolve(const Vec& f0, std::span<const double> times, double cn_step = 1e-3) const {
    if (f0.size() != size()) throw ParameterError("initial datum does not match the grid");
    if (!f0.allFinite()) throw ParameterError("initial datum is not finite");
    for (double t : times) {
      if (!(t >= 0)) {
        std::ostringstream os;
        os << "evolution time must be nonnegative, got " << t;
        throw ParameterError(os.str());
      }
    }
    return dense_spectrum() ? evolve_spectral(f0, times) : evolve_crank_nicolson(f0, times, cn_step);
  }

  /// α(t) = −∫Φ(P_t f)dμ and α'(t) = Φ'(P_t f)ᵀK P_t f along the flow.
  FlowTrace alpha_trace(const PhiFunction& phi, const Vec& f0, std::span<const double> times,
                        double tol = 0.02) const {
    if (times.empty()) throw ParameterError("flow trace needs at least one time");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw ParameterError("flow times must be increasing");
    }
    const auto states = evolve(f0, times);
    FlowTrace tr;
    tr.times.assign(times.begin(), times.end());
    for (std::size_t s = 0; s < states.size(); ++s) {
      const Vec& u = states[s];
      Vec pv(u.size()), d1(u.size());
      for (int i = 0; i < u.size(); ++i) {
        if (!phi.interval.contains(u(i))) {
          std::ostringstream os;
          os << "flow value " << u(i) << " leaves the domain of " << phi.label << " at t = " << times[s]
             << ", x = [" << node(i).transpose() << "]";
          throw DomainError(os.str());
        }
        pv(i) = phi(u(i));
        d1(i) = phi.d(1, u(i));
      }
      tr.alpha.push_back(-mass_.dot(pv));
      tr.alpha_prime.push_back(d1.dot(k_ * u));
    }
    const double rate = 2 * c_ * (beta_ - 1);
    const double a0 = tr.alpha_prime.front() * std::exp(rate * tr.times.front());
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      tr.bound.push_back(std::exp(-rate * tr.times[s]) * a0);
      if (tr.alpha_prime[s] > tr.bound[s] * (1 + tol) + 1e-300) tr.bound_holds = false;
    }
    tr.decay_fit_rate = fit_decay_rate(tr.times, tr.alpha_prime);
    return tr;
  }

  /// u with Lu = h and zero mean.
  Vec solve_poisson(const Vec& h) const {
    if (h.size() != size()) throw ParameterError("right-hand side does not match the grid");
    const double mh = mean(h);
    if (std::abs(mh) > 1e-8) {
      std::ostringstream os;
      os << "Poisson right-hand side must have zero mean, got " << mh;
      throw ContractViolation(os.str());
    }
    const int m = size();
    // Pin the heaviest node; the system is consistent because 1ᵀMh = 0.
    int pin = 0;
    mass_.maxCoeff(&pin);
    std::vector<int> keep;
    keep.reserve(m - 1);
    for (int i = 0; i < m; ++i) {
      if (i != pin) keep.push_back(i);
    }
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<int> pos(m, -1);
    for (int j = 0; j < m - 1; ++j) pos[keep[j]] = j;
    for (int col = 0; col < k_.outerSize(); ++col) {
      for (SpMat::InnerIterator it(k_, col); it; ++it) {
        if (pos[it.row()] >= 0 && pos[it.col()] >= 0) trip.emplace_back(pos[it.row()], pos[it.col()], it.value());
      }
    }
    SpMat sub(m - 1, m - 1);
    sub.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(sub);
    if (ldlt.info() != Eigen::Success) throw NumericError("Poisson factorization failed");
    auto solve = [&](const Vec& rhs) {
      Vec r(m - 1);
      for (int j = 0; j < m - 1; ++j) r(j) = rhs(keep[j]);
      const Vec y = ldlt.solve(r);
      if (ldlt.info() != Eigen::Success) throw NumericError("Poisson solve failed");
      Vec u = Vec::Zero(m);
      for (int j = 0; j < m - 1; ++j) u(keep[j]) = y(j);
      return u;
    };
    const Vec rhs = -mass_.cwiseProduct(h);
    Vec u = solve(rhs);
    u += solve(rhs - k_ * u);
    u.array() -= mean(u);
    return u;
  }

  /// ‖Lu − h‖_M / ‖h‖_M.
  double poisson_residual(const Vec& u, const Vec& h) const {
    const Vec r = apply(u) - h;
    const double hn = std::sqrt(inner(h, h));
    return hn > 0 ? std::sqrt(inner(r, r)) / hn : std::sqrt(inner(r, r));
  }

 private:
  struct Cache {
    std::once_flag once;
    Spectrum spectrum;
  };

  double coord(int i) const { return -radius_ + i * h_; }

  void assemble(const ConvexMeasure& m) {
    const auto& pot = m.potential();
    const int count = dim_ == 1 ? n_ : n_ * n_;
    const double logz = m.log_normalization();
    auto mu = [&](const Vec& x) { return std::exp(m.log_unnormalized(x) - logz); };
    mass_.resize(count);
    const double vol = std::pow(h_, dim_);
    for (int i = 0; i < count; ++i) mass_(i) = mu(node(i)) * vol;
    const double total = mass_.sum();
    if (!std::isfinite(total) || !(total > 0)) throw EvaluationError("generator mass is not finite");
    const double scale = 1.0 / total;
    mass_ *= scale;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(count) * (2 * dim_ + 1));
    Vec diag = Vec::Zero(count);
    const double wscale = std::pow(h_, dim_ - 2) * scale;
    auto edge = [&](int a, int b) {
      const Vec mid = 0.5 * (node(a) + node(b));
      const double w = pot.value(mid) * mu(mid) * wscale;
      if (!std::isfinite(w) || w < 0) {
        std::ostringstream os;
        os << "non-finite edge weight at x = [" << mid.transpose() << "]";
        throw EvaluationError(os.str());
      }
      trip.emplace_back(a, b, -w);
      trip.emplace_back(b, a, -w);
      diag(a) += w;
      diag(b) += w;
    };
    if (dim_ == 1) {
      for (int i = 0; i + 1 < n_; ++i) edge(i, i + 1);
    } else {
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
          const int idx = i * n_ + j;
          if (i + 1 < n_) edge(idx, idx + n_);
          if (j + 1 < n_) edge(idx, idx + 1);
        }
      }
    }
    for (int i = 0; i < count; ++i) trip.emplace_back(i, i, diag(i));
    k_.resize(count, count);
    k_.setFromTriplets(trip.begin(), trip.end());
    k_.makeCompressed();
  }

  Spectrum compute_spectrum() const {
    const int m = size();
    if (!dense_spectrum()) {
      std::ostringstream os;
      os << "dense spectrum limited to " << (dim_ == 1 ? kDenseLimit1d : kDenseLimit2d) << " unknowns, grid has "
         << m;
      throw UnsupportedError(os.str());
    }
    const Vec isq = mass_.cwiseSqrt().cwiseInverse();
    Spectrum sp;
    sp.values.resize(m);
    Mat z(m, m);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(m));
    lapack_int found = 0;
    int info = 0;
    if (dim_ == 1) {
      std::vector<double> d(m), e(m, 0.0);
      for (int i = 0; i < m; ++i) d[i] = k_.coeff(i, i) * isq(i) * isq(i);
      for (int i = 0; i + 1 < m; ++i) e[i] = k_.coeff(i, i + 1) * isq(i) * isq(i + 1);
      info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', m, d.data(), e.data(), 0, 0, 0, 0, 0, &found,
                            sp.values.data(), z.data(), m, support.data());
    } else {
      Mat s = isq.asDiagonal() * Mat(k_) * isq.asDiagonal();
      info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'U', m, s.data(), m, 0, 0, 0, 0, 0, &found,
                            sp.values.data(), z.data(), m, support.data());
    }
    if (info != 0 || found != m) throw NumericError("symmetric eigensolver failed, info = " + std::to_string(info));
    sp.vectors = isq.asDiagonal() * z;
    if (std::abs(sp.values(0)) < 1e-10 * std::max(1.0, std::abs(sp.values(m - 1)))) sp.values(0) = 0.0;
    return sp;
  }

  std::vector<Vec> evolve_spectral(const Vec& f0, std::span<const double> times) const {
    const Spectrum& sp = spectrum();
    const Vec coef = sp.vectors.transpose() * mass_.cwiseProduct(f0);
    std::vector<Vec> out;
    for (double t : times) {
      const Vec decay = (-sp.values.array() * t).exp();
      out.push_back(sp.vectors * coef.cwiseProduct(decay));
    }
    return out;
  }

  std::vector<Vec> evolve_crank_nicolson(const Vec& f0, std::span<const double> times, double dt_max) const {
    std::vector<Vec> out;
    Vec u = f0;
    double t = 0;
    SpMat mass_mat(size(), size());
    mass_mat.setIdentity();
    mass_mat = mass_.asDiagonal() * mass_mat;
    double last_dt = -1;
    Eigen::SimplicialLDLT<SpMat> solver;
    SpMat rhs_op;
    for (double target : times) {
      const double span = target - t;
      if (span > 0) {
        const int steps = std::max(1, static_cast<int>(std::ceil(span / dt_max)));
        const double dt = span / steps;
        if (std::abs(dt - last_dt) > 1e-15 * dt) {
          const SpMat lhs = mass_mat + 0.5 * dt * k_;
          rhs_op = mass_mat - 0.5 * dt * k_;
          solver.compute(lhs);
          if (solver.info() != Eigen::Success) throw NumericError("Crank-Nicolson factorization failed");
          last_dt = dt;
        }
        for (int s = 0; s < steps; ++s) u = solver.solve(rhs_op * u);
        t = target;
      }
      out.push_back(u);
    }
    return out;
  }

  /// Least-squares slope of −log α' over the positive entries.
  static double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& a) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    int k = 0;
    const double floor = 1e-300;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(a[i] > floor)) continue;
      const double y = std::log(a[i]);
      st += t[i];
      sy += y;
      stt += t[i] * t[i];
      sty += t[i] * y;
      ++k;
    }
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = k * stt - st * st;
    if (!(den > 0)) return std::numeric_limits<double>::quiet_NaN();
    return -(k * sty - st * sy) / den;
  }

  int dim_;
  int n_;
  double beta_;
  double c_;
  double radius_ = 0;
  double h_ = 0;
  SpMat k_;
  Vec mass_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Continuum (Lg)(x) = φΔg − (β−1)⟨∇φ, ∇g⟩.
inline double continuum_apply(const ConvexMeasure& m, const ScalarField& g, const Vec& x) {
  const auto& pot = m.potential();
  return pot.value(x) * g.laplacian(x) - (m.beta() - 1) * pot.gradient(x).dot(g.grad(x));
}

/// ∂_i(Lg) − L(∂_i g) − ∂_iφ Δg + (β−1)Σ_j ∂²_{ij}φ ∂_j g, by finite-difference
/// composition; zero for smooth g.
inline double commutation_residual(const ConvexMeasure& m, const ScalarField& g, int i, const Vec& x) {
  const int n = m.dim();
  if (i < 0 || i >= n) throw ParameterError("commutation axis out of range");
  const auto& pot = m.potential();
  auto lg = [&](const Vec& y) { return continuum_apply(m, g, y); };
  const double h = fd_step(x, 1e-4);
  Vec xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  const double d_lg = (lg(xp) - lg(xm)) / (2 * h);

  ScalarField dg;
  dg.dim = n;
  dg.value = [g, i](const Vec& y) { return g.grad(y)(i); };
  dg.gradient = [g, i](const Vec& y) -> Vec { return g.hess(y).col(i); };
  dg.label = "d" + std::to_string(i + 1) + g.label;
  const double l_dg = continuum_apply(m, dg, x);

  const Vec gphi = pot.gradient(x);
  const Mat hphi = pot.hessian(x);
  return d_lg - l_dg - gphi(i) * g.laplacian(x) + (m.beta() - 1) * hphi.row(i).dot(g.grad(x));
}

}  // namespace convexineq

#endif  // CONVEXINEQ_GENERATOR_HPP
