#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "convexineq/functionals.hpp"
#include "convexineq/inequality_checks.hpp"
#include "oracles.hpp"

using namespace convexineq;

namespace {

IntegrationOptions mc_opts(std::int64_t samples, std::uint64_t seed = 3) {
  IntegrationOptions o;
  o.method = Method::mc;
  o.mc.samples = samples;
  o.mc.seed = seed;
  return o;
}

std::vector<ScalarField> positive_fields(int n) {
  return {fields::tanh_ramp(n, 0, 1, 0.3), fields::gaussian_bump(Vec::Zero(n), 1, 0.5, 1),
          fields::sine(n, n - 1, 1, 0.2, 1.5), fields::gaussian_bump(Vec::Constant(n, 0.5), 1, -0.3, 0.7)};
}

}  // namespace

TEST(Classify, Rules) {
  EXPECT_EQ(classify(1.0, 0.0, 2.0, 0.0), Verdict::holds);
  EXPECT_EQ(classify(2.0, 0.0, 1.0, 0.0), Verdict::violated);
  EXPECT_EQ(classify(1.0, 0.01, 1.02, 0.0), Verdict::holds_with_equality);
  EXPECT_EQ(classify(1.0, 0.1, 1.0, 0.1), Verdict::inconclusive);
  EXPECT_EQ(classify(0.0, 0.0, 0.0, 0.0), Verdict::holds);
  EXPECT_EQ(classify(0.0, 0.0, 0.0, 0.0, true), Verdict::inconclusive);
  EXPECT_EQ(classify(NAN, 0.0, 1.0, 0.0), Verdict::inconclusive);
}

TEST(Inequalities, EqualityCatalogueForCauchy) {
  const auto m = make_cauchy(1, 5);
  const auto x = fields::coordinate(1, 0);
  for (const auto& opts : {IntegrationOptions{}, mc_opts(400000)}) {
    const Integrator integ(m, opts);
    const auto ent = check_phi_entropy(integ, phi_square(), x);
    const auto poi = check_beckner(integ, 1, x);
    const auto cov = check_covariance(integ, x, x, 2);
    for (const auto& r : {ent, poi, cov}) {
      EXPECT_EQ(r.verdict, Verdict::holds_with_equality) << to_string(r.id) << " " << r.provenance.method;
      EXPECT_NEAR(r.lhs, 1.0 / 7, 4 * r.lhs_err + 1e-7);
      EXPECT_NEAR(r.rhs, 1.0 / 7, 4 * r.rhs_err + 1e-7);
    }
    EXPECT_EQ(poi.id, InequalityId::poincare);
  }
}

TEST(Inequalities, NoFalseAlarmsOnPositiveFields) {
  for (auto [n, beta] : {std::pair{1, 6.0}, {2, 5.0}}) {
    const auto m = make_cauchy(n, beta);
    const Integrator integ(m, {});
    for (const auto& f : positive_fields(n)) {
      for (double p : {1.0, 1.2, p_beta(beta, n)}) {
        const auto r = check_beckner(integ, p, f);
        EXPECT_NE(r.verdict, Verdict::violated) << f.label << " p = " << p;
        EXPECT_LE(r.ratio, 1.0);
      }
      EXPECT_NE(check_phi_entropy(integ, phi_power(1.1), f).verdict, Verdict::violated);
    }
  }
}

TEST(Inequalities, GridAndMonteCarloAgree) {
  const auto m = make_cauchy(2, 5);
  const Integrator grid(m, {});
  const Integrator mc(m, mc_opts(300000));
  for (const auto& f : positive_fields(2)) {
    const auto a = check_beckner(grid, 1.2, f);
    const auto b = check_beckner(mc, 1.2, f);
    EXPECT_NEAR(a.lhs, b.lhs, 4 * (a.lhs_err + b.lhs_err) + 1e-6) << f.label;
    EXPECT_NEAR(a.rhs, b.rhs, 4 * (a.rhs_err + b.rhs_err) + 1e-6) << f.label;
  }
}

TEST(Inequalities, BecknerMatchesEntropyRoute) {
  const auto m = make_cauchy(1, 7);
  const Integrator integ(m, {});
  const auto f = fields::gaussian_bump(Vec::Zero(1), 1, 0.5, 1.2);
  for (double p : {1.2, 1.5}) {
    const auto a = check_beckner(integ, p, f);
    const auto b = check_beckner_via_phi_entropy(integ, p, f);
    EXPECT_NEAR(a.lhs, b.lhs, 1e-9);
    EXPECT_NEAR(a.rhs, b.rhs, 1e-7);
  }
}

TEST(Inequalities, BecknerLeftSideMatchesQuadratureOracle) {
  const double beta = 6, p = 1.4;
  auto fv = [](double x) { return 1 + 0.3 * std::tanh(x); };
  auto dfv = [](double x) { return 0.3 / (std::cosh(x) * std::cosh(x)); };
  const double lhs = oracle::cauchy_expect(beta, [&](double x) { return fv(x) * fv(x); }) -
                     std::pow(oracle::cauchy_expect(beta, [&](double x) { return std::pow(fv(x), p); }), 2 / p);
  const double rhs = (2 - p) / (2 * (beta - 1)) *
                     oracle::cauchy_expect(beta, [&](double x) { return dfv(x) * dfv(x) * (1 + x * x); });
  const auto r = check_beckner(Integrator(make_cauchy(1, beta), {}), p, fields::tanh_ramp(1, 0, 1, 0.3));
  EXPECT_NEAR(r.lhs, lhs, 1e-9);
  EXPECT_NEAR(r.rhs, rhs, 1e-9);
}

TEST(Inequalities, ThresholdErrorsNameTheThreshold) {
  const auto m = make_cauchy(1, 5);
  const Integrator integ(m, {});
  try {
    check_beckner(integ, 1.7, fields::constant(1, 1));
    FAIL();
  } catch (const ThresholdError& e) {
    EXPECT_NEAR(e.threshold(), p_beta(5, 1), 1e-15);
    EXPECT_NE(std::string(e.what()).find("p_beta"), std::string::npos);
  }
  const Integrator integ2(make_cauchy(2, 5), {});
  try {
    check_covariance(integ2, fields::coordinate(2, 0), fields::coordinate(2, 1), 40);
    FAIL();
  } catch (const ThresholdError& e) {
    EXPECT_NEAR(e.threshold(), p_beta_n(5, 2), 1e-12);
  }
  EXPECT_THROW(check_covariance(integ2, fields::coordinate(2, 0), fields::coordinate(2, 1), 1.5), ThresholdError);
}

TEST(Inequalities, PreconditionFailures) {
  const Integrator low(make_cauchy(1, 2), {});
  EXPECT_THROW(check_phi_entropy(low, phi_square(), fields::coordinate(1, 0)), OutOfRangeError);
  const Integrator integ(make_cauchy(1, 5), {});
  EXPECT_THROW(check_phi_entropy(integ, phi_xlogx(), fields::gaussian_bump(Vec::Zero(1), 1, 0.5, 1)),
               PreconditionError);
  EXPECT_THROW(check_beckner(integ, 1.2, fields::coordinate(1, 0)), DomainError);
}

TEST(Inequalities, CovarianceExponentCap) {
  const Integrator integ(make_cauchy(1, 5), {});
  const auto r = check_covariance(integ, fields::coordinate(1, 0), fields::tanh_ramp(1, 0, 0, 1), 200);
  EXPECT_EQ(r.parameter, kCovarianceExponentCap);
  EXPECT_FALSE(r.note.empty());
  EXPECT_NE(r.verdict, Verdict::violated);
}

TEST(Inequalities, SharpnessProbeApproachesOne) {
  const auto m = make_cauchy(1, 10);
  const Integrator integ(m, {});
  const double p = p_beta(10, 1);
  const double eps[] = {0.0, 0.3, 0.1, 0.03};
  const auto pts = sharpness_probe_beckner(integ, p, fields::coordinate(1, 0), eps);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].report.verdict, Verdict::inconclusive);
  EXPECT_LT(pts[1].ratio, pts[2].ratio);
  EXPECT_LT(pts[2].ratio, pts[3].ratio);
  EXPECT_GE(pts[3].ratio, 0.98);
  EXPECT_LE(pts[3].ratio, 1.0 + 1e-9);
  EXPECT_THROW(sharpness_probe_beckner(integ, p, fields::tanh_ramp(1, 0, 1, 0.1), eps), ContractViolation);
}

TEST(Inequalities, CclPrefactorFormMatchesReport) {
  const auto psi = gaussian_psi(2, 1.5);
  const double betas[] = {50, 400};
  const auto pts = limit_experiment_ccl(psi, betas, fields::linear(Vec::Unit(2, 0)),
                                        fields::sine(2, 1, 0, 1, 0.7), 3, {});
  ASSERT_EQ(pts.size(), 2u);
  for (const auto& pt : pts) {
    EXPECT_NEAR(pt.prefactor_rhs / pt.report.rhs, 1.0, 1e-10);
    EXPECT_NE(pt.report.verdict, Verdict::violated);
  }
}

TEST(Inequalities, LimitExperimentsRejectEmptySweeps) {
  const std::vector<double> none;
  EXPECT_THROW(limit_experiment_lsi(gaussian_psi(1), none, fields::constant(1, 1), {}), ParameterError);
  EXPECT_THROW(limit_experiment_ccl(gaussian_psi(1), none, fields::coordinate(1, 0), fields::coordinate(1, 0), 2, {}),
               ParameterError);
}
