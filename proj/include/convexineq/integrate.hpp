#ifndef CONVEXINEQ_INTEGRATE_HPP
#define CONVEXINEQ_INTEGRATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/grid.hpp"
#include "convexineq/linalg.hpp"
#include "convexineq/parallel.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq {

enum class Method { grid, mc };

inline std::string to_string(Method m) { return m == Method::grid ? "grid" : "mc"; }

struct GridOptions {
  std::optional<double> radius;  // nullopt = measure working radius
  int points_per_dim = 0;        // 0 = automatic step
};

struct McOptions {
  std::int64_t samples = 200000;
  std::int64_t burn_in = 5000;
  int stride = 1;
  std::uint64_t seed = 1;
};

struct IntegrationOptions {
  Method method = Method::grid;
  GridOptions grid;
  McOptions mc;
};

/// Value with its error estimate: grid refinement difference, or one
/// standard error of the mean for Monte Carlo.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct SampleBatch {
  Mat points;  // n × count, one sample per column
  std::uint64_t seed = 0;
  std::string method;  // "exact-cauchy" | "metropolis"
  double acceptance_rate = std::numeric_limits<double>::quiet_NaN();
  double step_size = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;  // metropolis acceptance outside [0.2, 0.6]

  std::int64_t size() const { return points.cols(); }
};

inline constexpr std::int64_t kSamplesPerShard = 1 << 16;

/// Exact sampler for (1 + |x|²)^{-β}: x = z/√g with z ~ N(0, I_n) and
/// g ~ χ²(2β − n) independent. Bit-reproducible from the seed for a given
/// standard library; shard boundaries do not depend on the worker count.
inline SampleBatch sample_cauchy(const ConvexMeasure& m, std::int64_t count, std::uint64_t seed) {
  if (m.kind() != MeasureKind::cauchy) throw ParameterError("exact sampler needs a generalized Cauchy measure");
  const int n = m.dim();
  const double nu = 2 * m.beta() - n;
  if (!(nu > 0)) throw ParameterError("exact Cauchy sampler needs 2*beta - n > 0");
  if (count <= 0) throw ParameterError("sample count must be positive");
  SampleBatch b;
  b.points.resize(n, count);
  b.seed = seed;
  b.method = "exact-cauchy";
  const int shards = static_cast<int>((count + kSamplesPerShard - 1) / kSamplesPerShard);
  parallel_for(shards, [&](int s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::gamma_distribution<double> chi2(0.5 * nu, 2.0);
    const std::int64_t lo = s * kSamplesPerShard;
    const std::int64_t hi = std::min(count, lo + kSamplesPerShard);
    for (std::int64_t j = lo; j < hi; ++j) {
      for (int i = 0; i < n; ++i) b.points(i, j) = normal(rng);
      const double g = chi2(rng);
      b.points.col(j) /= std::sqrt(g);
    }
  });
  return b;
}

/// Random-walk Metropolis with Gaussian proposals. The step is adapted on the
/// log scale toward acceptance 0.4 during burn-in, then frozen; the retained
/// chain is thinned by `stride`.
inline SampleBatch sample_metropolis(const ConvexMeasure& m, std::int64_t count, std::int64_t burn_in,
                                     std::uint64_t seed, int stride = 1) {
  if (count <= 0) throw ParameterError("sample count must be positive");
  if (burn_in < 0 || stride < 1) throw ParameterError("burn_in must be >= 0 and stride >= 1");
  const int n = m.dim();
  const auto& pot = m.potential();
  std::mt19937_64 rng(derive_seed(seed, 0x4d43));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vec x = Vec::Zero(n);
  double logp = m.log_unnormalized(x);
  // Initial scale from the curvature of −log density at the origin.
  const double phi0 = pot.value(x);
  const Vec g0 = pot.gradient(x);
  const Mat curv = m.beta() * (pot.hessian(x) / phi0 - g0 * g0.transpose() / (phi0 * phi0));
  const double cmax = std::max(sym_eig(curv).eigenvalues().maxCoeff(), 1e-12);
  double log_step = std::log(2.38 / std::sqrt(double(n) * cmax));

  auto propose = [&](double step) -> bool {
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = x(i) + step * normal(rng);
    double logq;
    try {
      logq = m.log_unnormalized(y);
    } catch (const DomainError&) {
      return false;
    }
    if (std::log(unif(rng)) < logq - logp) {
      x = std::move(y);
      logp = logq;
      return true;
    }
    return false;
  };

  constexpr int kBatch = 50;
  const double target = 0.4;
  std::int64_t done = 0;
  int batch_index = 0;
  while (done < burn_in) {
    const std::int64_t len = std::min<std::int64_t>(kBatch, burn_in - done);
    int acc = 0;
    for (std::int64_t i = 0; i < len; ++i) acc += propose(std::exp(log_step));
    done += len;
    ++batch_index;
    log_step += (double(acc) / len - target) * 2.0 / std::sqrt(double(batch_index));
  }

  SampleBatch b;
  b.points.resize(n, count);
  b.seed = seed;
  b.method = "metropolis";
  b.step_size = std::exp(log_step);
  std::int64_t accepted = 0, proposed = 0;
  for (std::int64_t j = 0; j < count; ++j) {
    for (int s = 0; s < stride; ++s) {
      accepted += propose(b.step_size);
      ++proposed;
    }
    b.points.col(j) = x;
  }
  b.acceptance_rate = double(accepted) / double(proposed);
  if (b.acceptance_rate < 0.05 || b.acceptance_rate > 0.95) {
    std::ostringstream os;
    os << "metropolis tuning failed: acceptance " << b.acceptance_rate << " on " << m.describe();
    throw TuningError(os.str());
  }
  b.flagged = b.acceptance_rate < 0.2 || b.acceptance_rate > 0.6;
  return b;
}

/// Integrated autocorrelation time by Geyer's initial monotone sequence.
inline double integrated_autocorrelation(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return 1.0;
  double mean = 0;
  for (double v : series) mean += v;
  mean /= double(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - mean) * (series[i + lag] - mean);
    return s / double(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0)) return 1.0;
  double sum_pairs = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum_pairs += pair;
  }
  return std::max(1.0, (2 * sum_pairs - g0) / g0);
}

/// Evaluates k integrands at one point.
using MomentFn = std::function<void(const Vec&, std::span<double>)>;
/// Maps the k expectations to one functional value.
using Combine = std::function<double(std::span<const double>)>;

/// Expectation backend bound to one measure and one method. Monte Carlo
/// samples are drawn once at construction, so every functional computed from
/// the same integrator shares them.
class Integrator {
 public:
  Integrator(ConvexMeasure m, IntegrationOptions opts) : measure_(std::move(m)), opts_(opts) {
    if (opts_.method == Method::grid) {
      measure_.require_normalized();
      const double r = opts_.grid.radius.value_or(measure_.working_radius());
      if (opts_.grid.points_per_dim > 0) {
        grid_ = QuadratureGrid::make(measure_.dim(), r, opts_.grid.points_per_dim);
      } else {
        grid_ = detail::default_grid(measure_.dim(), r, measure_.length_scale());
      }
      log_ref_ = measure_.log_unnormalized(Vec::Zero(measure_.dim()));
    } else {
      if (opts_.mc.samples <= 0) throw ParameterError("Monte Carlo budget must be positive");
      if (measure_.kind() == MeasureKind::cauchy) {
        samples_ = std::make_shared<SampleBatch>(sample_cauchy(measure_, opts_.mc.samples, opts_.mc.seed));
      } else {
        samples_ = std::make_shared<SampleBatch>(sample_metropolis(
            measure_, opts_.mc.samples, opts_.mc.burn_in, opts_.mc.seed, opts_.mc.stride));
      }
    }
  }

  const ConvexMeasure& measure() const { return measure_; }
  const IntegrationOptions& options() const { return opts_; }
  Method method() const { return opts_.method; }
  const QuadratureGrid& grid() const { return grid_; }
  const SampleBatch* samples() const { return samples_.get(); }

  /// Several functionals of the same k moments; each gets its own error.
  std::vector<Estimate> estimate(int k, const MomentFn& moments, std::span<const Combine> combines) const {
    auto checked = [&moments, k](const Vec& x, std::span<double> out) {
      moments(x, out);
      for (int j = 0; j < k; ++j) {
        if (!std::isfinite(out[j])) {
          std::ostringstream os;
          os << "non-finite integrand at x = [" << x.transpose() << "]";
          throw EvaluationError(os.str());
        }
      }
    };
    return opts_.method == Method::grid ? estimate_grid(k, checked, combines)
                                        : estimate_mc(k, checked, combines);
  }

  Estimate estimate(int k, const MomentFn& moments, const Combine& combine) const {
    const Combine c[] = {combine};
    return estimate(k, moments, std::span<const Combine>(c))[0];
  }

  Estimate expectation(const std::function<double(const Vec&)>& f) const {
    return estimate(
        1, [&f](const Vec& x, std::span<double> out) { out[0] = f(x); },
        [](std::span<const double> m) { return m[0]; });
  }

  /// Unnormalized grid mass h^n Σ φ^{-β} divided by Z; 1 up to truncation.
  double raw_grid_mass() const {
    const GridSums s = accumulate_grid(
        grid_, 0, [this](const Vec& x) { return std::exp(measure_.log_unnormalized(x) - log_ref_); },
        [](const Vec&, std::span<double>) {});
    return s.mass_full * grid_.cell_volume() * std::exp(log_ref_ - measure_.log_normalization());
  }

 private:
  template <class Moments>
  std::vector<Estimate> estimate_grid(int k, Moments&& moments, std::span<const Combine> combines) const {
    const GridSums s = accumulate_grid(
        grid_, k, [this](const Vec& x) { return std::exp(measure_.log_unnormalized(x) - log_ref_); },
        [&moments](const Vec& x, std::vector<double>& out) { moments(x, std::span<double>(out)); });
    std::vector<double> full(k), coarse(k), inner(k);
    for (int j = 0; j < k; ++j) {
      full[j] = s.full[j] / s.mass_full;
      coarse[j] = s.coarse[j] / s.mass_coarse;
      inner[j] = s.inner[j] / s.mass_inner;
    }
    std::vector<Estimate> out;
    for (const auto& c : combines) {
      const double v = c(full);
      const double err = std::abs(v - c(coarse)) + std::abs(v - c(inner)) + 1e-14 * std::abs(v);
      out.push_back({v, err});
    }
    return out;
  }

  template <class Moments>
  std::vector<Estimate> estimate_mc(int k, Moments&& moments, std::span<const Combine> combines) const {
    const SampleBatch& b = *samples_;
    const std::int64_t count = b.size();
    Mat y(k, count);
    const int shards = static_cast<int>((count + kSamplesPerShard - 1) / kSamplesPerShard);
    parallel_for(shards, [&](int s) {
      std::vector<double> vals(k);
      const std::int64_t lo = s * kSamplesPerShard;
      const std::int64_t hi = std::min(count, lo + kSamplesPerShard);
      for (std::int64_t j = lo; j < hi; ++j) {
        moments(Vec(b.points.col(j)), std::span<double>(vals));
        for (int i = 0; i < k; ++i) y(i, j) = vals[i];
      }
    });
    std::vector<double> mean(k, 0.0);
    for (int i = 0; i < k; ++i) {
      double total = 0;
      for (std::int64_t j = 0; j < count; ++j) total += y(i, j);
      mean[i] = total / double(count);
    }
    std::vector<double> sd(k, 0.0);
    for (int i = 0; i < k; ++i) {
      double acc = 0;
      for (std::int64_t j = 0; j < count; ++j) acc += (y(i, j) - mean[i]) * (y(i, j) - mean[i]);
      sd[i] = std::sqrt(acc / std::max<std::int64_t>(1, count - 1));
    }
    std::vector<Estimate> out;
    for (const auto& c : combines) {
      const double v = c(mean);
      // Delta method: SE of the linearized influence Σ_j ∂_j c · y_j.
      std::vector<double> grad(k), probe = mean;
      for (int i = 0; i < k; ++i) {
        const double h = 1e-6 * (std::abs(mean[i]) + sd[i]) + 1e-300;
        probe[i] = mean[i] + h;
        const double up = c(probe);
        probe[i] = mean[i] - h;
        const double dn = c(probe);
        probe[i] = mean[i];
        grad[i] = (up - dn) / (2 * h);
      }
      std::vector<double> infl(count);
      for (std::int64_t j = 0; j < count; ++j) {
        double s = 0;
        for (int i = 0; i < k; ++i) s += grad[i] * (y(i, j) - mean[i]);
        infl[j] = s;
      }
      double var = 0;
      for (double s : infl) var += s * s;
      var /= double(std::max<std::int64_t>(1, count - 1));
      double tau = 1.0;
      if (b.method == "metropolis") tau = integrated_autocorrelation(infl);
      out.push_back({v, std::sqrt(var * tau / double(count))});
    }
    return out;
  }

  ConvexMeasure measure_;
  IntegrationOptions opts_;
  QuadratureGrid grid_;
  double log_ref_ = 0.0;
  std::shared_ptr<const SampleBatch> samples_;
};

/// E_μ[f] with error estimate.
inline Estimate expectation(const ConvexMeasure& m, const ScalarField& f, const IntegrationOptions& opts) {
  Integrator integ(m, opts);
  return integ.expectation([&f](const Vec& x) { return f.value(x); });
}

}  // namespace convexineq

#endif  // CONVEXINEQ_INTEGRATE_HPP
