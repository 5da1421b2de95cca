#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdlib>
#include <random>

#include "convexineq/functionals.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"
#include "oracles.hpp"

using namespace convexineq;

namespace {

IntegrationOptions grid_opts() { return {}; }

IntegrationOptions mc_opts(std::int64_t samples, std::uint64_t seed = 7) {
  IntegrationOptions o;
  o.method = Method::mc;
  o.mc.samples = samples;
  o.mc.seed = seed;
  return o;
}

ScalarField x1(int n = 1) { return fields::coordinate(n, 0); }

}  // namespace

// ---- potentials -----------------------------------------------------------

TEST(Potentials, CauchyNormalizationMatchesGammaFormula) {
  for (double beta : {2.0, 2.5, 5.0, 12.0}) {
    EXPECT_NEAR(make_cauchy(1, beta).normalization() / oracle::cauchy_z(1, beta), 1.0, 1e-12) << beta;
  }
  for (auto [n, beta] : {std::pair{2, 2.5}, {2, 4.0}, {3, 2.5}, {3, 4.0}, {3, 9.0}}) {
    EXPECT_NEAR(make_cauchy(n, beta).normalization() / oracle::cauchy_z(n, beta), 1.0, 1e-9) << n << " " << beta;
  }
}

TEST(Potentials, CauchyBetaFiveValue) {
  // √π Γ(4.5) / Γ(5) = 35π/128.
  EXPECT_NEAR(make_cauchy(1, 5).normalization(), 35 * std::numbers::pi / 128, 1e-12);
}

TEST(Potentials, HeavyTailNeedsMonteCarloMode) {
  EXPECT_THROW(make_cauchy(1, 1.0), ParameterError);
  const auto m = make_cauchy(1, 1.0, NormalizationMode::mc_only);
  EXPECT_NO_THROW(sample_cauchy(m, 100, 1));
}

TEST(Potentials, RejectsNonIntegrableBeta) {
  EXPECT_THROW(make_cauchy(1, 0.5), ParameterError);
  EXPECT_THROW(make_cauchy(2, 1.0), ParameterError);
  EXPECT_THROW(make_quadratic(Mat::Identity(2, 2), 0.9), ParameterError);
}

TEST(Potentials, QuadraticValidation) {
  Mat a(2, 2);
  a << 1, 0.5, 0.4, 1;
  EXPECT_THROW(quadratic_potential(a), ParameterError);
  a << 1, 2, 2, 1;
  EXPECT_THROW(quadratic_potential(a), ParameterError);
  EXPECT_THROW(quadratic_potential(Mat::Identity(2, 2), 0.0), ParameterError);
}

TEST(Potentials, QuadraticNormalizationByChangeOfVariables) {
  Mat a(2, 2);
  a << 2.0, 0.3, 0.3, 0.5;
  const double beta = 4;
  // x = A^{-1/2}y turns φ into the Cauchy potential.
  const double expected = oracle::cauchy_z(2, beta) / std::sqrt(a.determinant());
  EXPECT_NEAR(make_quadratic(a, beta).normalization() / expected, 1.0, 1e-6);
}

TEST(Potentials, HessianEigenvalueIsTranslationInvariantForQuadratics) {
  Mat a(3, 3);
  a << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
  const auto p = quadratic_potential(a);
  const double expected = 2 * Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues()(0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 5);
  std::vector<Vec> pts;
  for (int i = 0; i < 20; ++i) {
    Vec x(3);
    for (int j = 0; j < 3; ++j) x(j) = g(rng);
    pts.push_back(x);
    EXPECT_NEAR(min_hessian_eigenvalue(p, x), expected, 1e-12);
  }
  const auto d = diagnose(p, pts);
  EXPECT_TRUE(d.ok);
  EXPECT_NEAR(d.min_eigenvalue, p.convexity_constant, 1e-12);
}

TEST(Potentials, FiniteDifferencePotentialMatchesAnalytic) {
  const auto exact = cauchy_potential(2);
  const auto fd = potential_from_value(2, exact.value, 2.0, "fd");
  Vec x(2);
  x << 0.7, -1.3;
  EXPECT_LT((fd.gradient(x) - exact.gradient(x)).norm(), 1e-7);
  EXPECT_LT((fd.hessian(x) - exact.hessian(x)).norm(), 1e-4);
}

TEST(Potentials, NonPositivePotentialIsRejected) {
  auto p = potential_from_value(1, [](const Vec& x) { return x.squaredNorm() - 1; }, 2.0, "bad");
  EXPECT_THROW(ConvexMeasure(p, 3, MeasureKind::custom), DomainError);
}

TEST(Potentials, LimitFamilyApproachesGaussian) {
  const auto psi = gaussian_psi(1, 1.0);
  const auto m = make_limit_family(psi, 1e4);
  double sup = 0;
  for (double x = -5; x <= 5; x += 0.01) {
    Vec v(1);
    v << x;
    const double gauss = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
    sup = std::max(sup, std::abs(std::exp(m.log_density(v)) - gauss));
  }
  EXPECT_LT(sup, 1e-2);
  EXPECT_NEAR(expectation(m, fields::polynomial(1, 0, {0, 0, 1}), grid_opts()).value, 1.0, 0.02);
}

TEST(Potentials, LimitFamilySecondMomentTracksRho) {
  const auto m = make_limit_family(gaussian_psi(1, 2.0), 1e4);
  EXPECT_NEAR(expectation(m, fields::polynomial(1, 0, {0, 0, 1}), grid_opts()).value, 0.5, 0.01);
}

// ---- phi functions ---------------------------------------------------------

TEST(PhiFunctions, ConditionConstantValues) {
  EXPECT_NEAR(condition_constant_K(5, 1), 225.0 / 96.0, 1e-15);
  EXPECT_NEAR(condition_constant_K(6, 2), (19.0 * 19.0 + 1) / (8 * 5 * 3), 1e-15);
  EXPECT_THROW(condition_constant_K(2, 1), OutOfRangeError);
  EXPECT_THROW(condition_constant_K(3.5, 3), OutOfRangeError);
}

TEST(PhiFunctions, BecknerThresholdSolvesAdmissibilityEquation) {
  // For Φ = t^{2/p} the admissibility ratio is (3 − a)/(2 − a) with a = 2/p;
  // equating it to K gives p = 2(K − 1)/(2K − 3).
  for (int n : {1, 2, 3, 5}) {
    for (double beta : {n + 1.5, n + 3.0, n + 10.0, 250.0}) {
      const double k = condition_constant_K(beta, n);
      EXPECT_NEAR(p_beta(beta, n), 2 * (k - 1) / (2 * k - 3), 1e-12) << n << " " << beta;
      EXPECT_GT(p_beta(beta, n), 1.0);
      EXPECT_LT(p_beta(beta, n), 2.0);
    }
  }
  EXPECT_NEAR(p_beta(5, 1), 129.0 / 81.0, 1e-14);
}

TEST(PhiFunctions, BecknerThresholdTendsToTwo) {
  double prev = 0;
  for (double beta : {10.0, 100.0, 1000.0, 1e5}) {
    const double p = p_beta(beta, 2);
    EXPECT_GT(p, prev);
    prev = p;
  }
  EXPECT_NEAR(prev, 2.0, 1e-4);
}

TEST(PhiFunctions, CovarianceThresholdEdgeCases) {
  EXPECT_TRUE(std::isinf(p_beta_n(5, 1)));
  EXPECT_NEAR(p_beta_n(3, 2), 2.0, 1e-15);
  EXPECT_NEAR(p_beta_n(4, 3), 2.0, 1e-15);
  EXPECT_THROW(p_beta_n(2.5, 2), OutOfRangeError);
}

TEST(PhiFunctions, CovarianceThresholdIsWhereExtremalPatternTurnsNegative) {
  // Brute force over λ = (cos θ, sin θ, …) at the first vertex with a plain
  // scan, written independently of the library search.
  auto min_f = [](int n, double beta, double p) {
    double best = 1e300;
    for (int k = 0; k < 200000; ++k) {
      const double th = std::numbers::pi * k / 200000;
      const double c = std::cos(th), s = std::sin(th);
      const double s1 = c + (n - 1) * s, s2 = c * c + (n - 1) * s * s;
      const double f = (beta - 1) * s2 - s1 * s1 + (p - 2) * ((beta - 1) * c * c - s1 * c);
      best = std::min(best, f);
    }
    return best;
  };
  for (auto [n, beta] : {std::pair{2, 5.0}, {3, 6.0}}) {
    const double t = p_beta_n(beta, n);
    EXPECT_GE(min_f(n, beta, 0.999 * t), -1e-9);
    EXPECT_LT(min_f(n, beta, 1.001 * t), 0.0);
  }
}

TEST(PhiFunctions, DerivativesAreConsistent) {
  for (const auto& phi : builtin_phis(1.3)) {
    for (double t : {0.3, 1.0, 2.7}) {
      for (int k = 0; k < 4; ++k) {
        const double h = 1e-5 * t;
        const double fd = (phi.d(k, t + h) - phi.d(k, t - h)) / (2 * h);
        EXPECT_NEAR(fd, phi.d(k + 1, t), 1e-6 * std::max(1.0, std::abs(phi.d(k + 1, t)))) << phi.label << k;
      }
    }
  }
}

TEST(PhiFunctions, PowerRangeIsChecked) {
  EXPECT_THROW(phi_power(2.5), ParameterError);
  EXPECT_THROW(phi_power(0.0), ParameterError);
  EXPECT_NO_THROW(phi_power(2.0));
}

TEST(PhiFunctions, Admissibility) {
  const auto pts = default_sample_points({0.0, kInf});
  EXPECT_TRUE(is_admissible(phi_square(), 5, 1, default_sample_points({})).admissible);
  // K(β, 1) > 2 for every β, so t log t is never admissible.
  EXPECT_FALSE(is_admissible(phi_xlogx(), 5, 1, pts).admissible);
  EXPECT_FALSE(is_admissible(phi_xlogx(), 1000, 1, pts).admissible);
  EXPECT_TRUE(is_admissible(phi_power(1.5), 5, 1, pts).admissible);
  const auto bad = is_admissible(phi_power(1.7), 5, 1, pts);
  EXPECT_FALSE(bad.admissible);
  ASSERT_TRUE(bad.witness.has_value());
  EXPECT_GT(*bad.witness, 0.0);
}

// ---- integration -------------------------------------------------------------

TEST(Integrate, GridMomentsMatchOracles) {
  const auto m = make_cauchy(1, 5);
  const Integrator integ(m, grid_opts());
  // Truncating 1e-8 of tail mass costs about 5e-7 in the second moment.
  EXPECT_NEAR(variance(integ, x1()).value, 1.0 / 7, 1e-6);
  const double cos_oracle = oracle::cauchy_expect(5, [](double x) { return std::cos(x); });
  const auto c = integ.expectation([](const Vec& x) { return std::cos(x(0)); });
  EXPECT_NEAR(c.value, cos_oracle, 1e-8);
  EXPECT_NEAR(integ.raw_grid_mass(), 1.0, 1e-6);
}

TEST(Integrate, IntervalProbability) {
  const double beta = 5;
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double p_oracle =
      gk.integrate([beta](double x) { return std::pow(1 + x * x, -beta); }, -1.0, 1.0) / oracle::cauchy_z(1, beta);
  const auto m = make_cauchy(1, beta);
  auto ind = [](const Vec& x) { return std::abs(x(0)) <= 1 ? 1.0 : 0.0; };
  EXPECT_NEAR(Integrator(m, grid_opts()).expectation(ind).value, p_oracle, 2e-3);
  const auto mc = Integrator(m, mc_opts(400000)).expectation(ind);
  EXPECT_NEAR(mc.value, p_oracle, 4 * mc.error);
}

TEST(Integrate, MonteCarloSecondMomentsInHigherDimension) {
  for (auto [n, beta] : {std::pair{2, 4.0}, {3, 5.0}}) {
    const auto m = make_cauchy(n, beta);
    const Integrator integ(m, mc_opts(300000));
    for (int i = 0; i < n; ++i) {
      const auto e = integ.expectation([i](const Vec& x) { return x(i) * x(i); });
      EXPECT_NEAR(e.value, oracle::cauchy_second_moment(n, beta), 4 * e.error) << n << " " << i;
    }
  }
}

TEST(Integrate, GridSecondMomentInTwoDimensions) {
  const auto m = make_cauchy(2, 5);
  const auto e = Integrator(m, grid_opts()).expectation([](const Vec& x) { return x(1) * x(1); });
  EXPECT_NEAR(e.value, oracle::cauchy_second_moment(2, 5), 2e-3);
}

TEST(Integrate, ExactSamplerIsDeterministicAcrossWorkerCounts) {
  const auto m = make_cauchy(2, 4);
  setenv("CONVEXINEQ_THREADS", "1", 1);
  const auto a = sample_cauchy(m, 200000, 11);
  setenv("CONVEXINEQ_THREADS", "4", 1);
  const auto b = sample_cauchy(m, 200000, 11);
  unsetenv("CONVEXINEQ_THREADS");
  EXPECT_TRUE(a.points == b.points);
  const auto c = sample_cauchy(m, 200000, 12);
  EXPECT_FALSE(a.points == c.points);
}

TEST(Integrate, MetropolisAgreesWithQuadrature) {
  Mat a(2, 2);
  a << 1.5, 0.4, 0.4, 0.8;
  const auto m = make_quadratic(a, 5);
  IntegrationOptions o = mc_opts(400000, 5);
  const Integrator mc(m, o);
  EXPECT_FALSE(mc.samples()->flagged);
  const auto f = [](const Vec& x) { return x(0) * x(1) + x(0); };
  const auto e = mc.expectation(f);
  const auto g = Integrator(m, grid_opts()).expectation(f);
  EXPECT_NEAR(e.value, g.value, 4 * e.error + 1e-3);
}

TEST(Integrate, AutocorrelationOfIndependentSeriesIsNearOne) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> s(100000);
  for (auto& v : s) v = g(rng);
  EXPECT_NEAR(integrated_autocorrelation(s), 1.0, 0.05);
  // AR(1) with coefficient r has τ = (1 + r)/(1 − r).
  const double r = 0.8;
  for (std::size_t i = 1; i < s.size(); ++i) s[i] = r * s[i - 1] + std::sqrt(1 - r * r) * g(rng);
  EXPECT_NEAR(integrated_autocorrelation(s), 9.0, 1.5);
}

// ---- functionals -------------------------------------------------------------

TEST(Functionals, PoincareEqualityPairForCauchy) {
  const auto m = make_cauchy(1, 5);
  const Integrator integ(m, grid_opts());
  EXPECT_NEAR(variance(integ, x1()).value, 1.0 / 7, 1e-6);
  // E φ = 1 + 1/7.
  EXPECT_NEAR(weighted_dirichlet(integ, x1()).value, 8.0 / 7, 1e-6);
}

TEST(Functionals, CovarianceIsBilinearAndShiftInvariant) {
  const auto m = make_cauchy(2, 5);
  const Integrator integ(m, grid_opts());
  const auto g1 = fields::tanh_ramp(2, 0, 0, 1, 1.5);
  const auto g2 = fields::gaussian_bump(Vec::Constant(2, 0.3), 0, 1, 0.8);
  const auto h = fields::sine(2, 1, 0, 1, 0.7);
  const auto h2 = fields::sum(fields::coordinate(2, 0), h);
  const double lin = covariance(integ, fields::sum(fields::affine(g1, 2.0, 0), fields::affine(g2, -3.0, 0)), h2).value;
  const double parts = 2 * covariance(integ, g1, h2).value - 3 * covariance(integ, g2, h2).value;
  EXPECT_NEAR(lin, parts, 1e-12);
  EXPECT_NEAR(covariance(integ, fields::affine(g1, 1, 5.0), h2).value, covariance(integ, g1, h2).value, 1e-12);
  EXPECT_NEAR(covariance(integ, g1, g1).value, variance(integ, g1).value, 1e-14);
}

TEST(Functionals, EntropyOfSquareIsVariance) {
  const auto m = make_cauchy(1, 6);
  const Integrator integ(m, grid_opts());
  const auto f = fields::tanh_ramp(1, 0, 1, 0.4);
  EXPECT_NEAR(phi_entropy(integ, phi_square(), f).value, variance(integ, f).value, 1e-13);
}

TEST(Functionals, EntropyNonnegativeAndZeroOnConstants) {
  const auto m = make_cauchy(1, 6);
  const Integrator integ(m, grid_opts());
  for (const auto& phi : builtin_phis(1.4)) {
    EXPECT_GE(phi_entropy(integ, phi, fields::gaussian_bump(Vec::Zero(1), 1, 0.5, 1)).value, 0.0) << phi.label;
    EXPECT_NEAR(phi_entropy(integ, phi, fields::constant(1, 2.0)).value, 0.0, 1e-12) << phi.label;
  }
}

TEST(Functionals, EntropyMatchesQuadratureOracle) {
  const double beta = 6;
  const auto m = make_cauchy(1, beta);
  const auto f = fields::sine(1, 0, 1, 0.3, 1);
  auto fv = [](double x) { return 1 + 0.3 * std::sin(x); };
  const double ef = oracle::cauchy_expect(beta, fv);
  const double eflogf = oracle::cauchy_expect(beta, [&](double x) { return fv(x) * std::log(fv(x)); });
  EXPECT_NEAR(phi_entropy(m, phi_xlogx(), f, grid_opts()).value, eflogf - ef * std::log(ef), 1e-8);
}

TEST(Functionals, WeightedEnergyChainRule) {
  const auto m = make_cauchy(1, 5);
  const Integrator integ(m, grid_opts());
  const auto f = fields::tanh_ramp(1, 0, 0, 1, 2);
  EXPECT_NEAR(phi_weighted_energy(integ, phi_square(), f).value, 2 * weighted_dirichlet(integ, f).value, 1e-12);
  // Φ = t^{2/p} with f = g^p: Φ''(g^p)|∇g^p|² = (2/p)(2/p − 1)g^{2−2p}·p²g^{2p−2}|∇g|² = 2(2 − p)|∇g|².
  const double p = 1.5;
  const auto g = fields::gaussian_bump(Vec::Zero(1), 1, 0.5, 1);
  EXPECT_NEAR(phi_weighted_energy(integ, phi_power(p), fields::power(g, p)).value,
              2 * (2 - p) * weighted_dirichlet(integ, g).value, 1e-7);
}

TEST(Functionals, DomainErrorNamesThePoint) {
  const auto m = make_cauchy(1, 5);
  try {
    phi_entropy(m, phi_xlogx(), x1(), grid_opts());
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("x = ["), std::string::npos);
  }
}
