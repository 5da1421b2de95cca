#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "convexineq/generator.hpp"
#include "oracles.hpp"

using namespace convexineq;

namespace {

// Nodes well inside the box, where the boundary does not matter.
std::vector<int> interior(const DiscreteGenerator& g, double radius) {
  std::vector<int> idx;
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).cwiseAbs().maxCoeff() <= radius) idx.push_back(i);
  }
  return idx;
}

}  // namespace

TEST(Generator, CauchyGapAndEigenfunction) {
  for (double beta : {3.0, 4.0, 5.0, 8.0}) {
    const DiscreteGenerator g(make_cauchy(1, beta), {});
    EXPECT_NEAR(g.spectral_gap() / oracle::cauchy_eigenvalue(1, beta), 1.0, 1e-2) << beta;
    EXPECT_GE(g.correlation(g.gap_eigenfunction(), g.sample(fields::coordinate(1, 0))), 0.999) << beta;
  }
}

TEST(Generator, SecondEigenvalue) {
  const DiscreteGenerator g(make_cauchy(1, 6), {});
  EXPECT_NEAR(g.spectrum().values(2) / oracle::cauchy_eigenvalue(2, 6), 1.0, 1e-2);
  EXPECT_NEAR(g.spectrum().values(0), 0.0, 1e-8);
}

TEST(Generator, AnnihilatesConstantsAndIsSymmetric) {
  const DiscreteGenerator g(make_cauchy(1, 5), {401});
  const Vec one = Vec::Ones(g.size());
  EXPECT_LT(g.apply(one).cwiseAbs().maxCoeff(), 1e-10);
  const Vec f = g.sample(fields::tanh_ramp(1, 0, 0, 1, 1));
  const Vec h = g.sample(fields::gaussian_bump(Vec::Zero(1), 0, 1, 0.7));
  EXPECT_NEAR(g.inner(g.apply(f), h), g.inner(f, g.apply(h)), 1e-12);
  EXPECT_NEAR(-g.inner(g.apply(f), f), g.energy(f, f), 1e-12);
  EXPECT_GT(g.energy(f, f), 0.0);
}

TEST(Generator, MatchesContinuumOperatorInTheInterior) {
  const double beta = 5;
  const auto m = make_cauchy(1, beta);
  const DiscreteGenerator g(m, {});
  const auto f = fields::polynomial(1, 0, {0, 0, 1});
  const Vec lf = g.apply(g.sample(f));
  for (int i : interior(g, 3.0)) {
    const double x = g.node(i)(0);
    // L x² = 2φ − 4(β−1)x².
    const double exact = 2 * (1 + x * x) - 4 * (beta - 1) * x * x;
    EXPECT_NEAR(lf(i), exact, 1e-3 * (1 + std::abs(exact)));
    EXPECT_NEAR(continuum_apply(m, f, g.node(i)), exact, 1e-5 * (1 + std::abs(exact)));
  }
}

TEST(Generator, SemigroupPreservesMeanAndDecaysEigenfunction) {
  const double beta = 5;
  const DiscreteGenerator g(make_cauchy(1, beta), {});
  const Vec f0 = g.sample(fields::sum(fields::coordinate(1, 0), fields::tanh_ramp(1, 0, 1, 0.5)));
  const std::vector<double> ts{0.0, 0.05, 0.1, 0.15};
  const auto states = g.evolve(f0, ts);
  for (const auto& u : states) EXPECT_NEAR(g.mean(u), g.mean(f0), 1e-10);

  const Vec x = g.sample(fields::coordinate(1, 0));
  const auto xs = g.evolve(x, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double expected = std::exp(-oracle::cauchy_eigenvalue(1, beta) * ts[k]);
    for (int i : interior(g, 2.0)) EXPECT_NEAR(xs[k](i), expected * x(i), 1e-3 * std::abs(x(i)) + 1e-9);
  }
  // P_{0.1} = P_{0.05} P_{0.05}.
  const std::vector<double> half{0.05};
  const Vec twice = g.evolve(g.evolve(f0, half)[0], half)[0];
  EXPECT_LT((twice - states[2]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Generator, CrankNicolsonAgreesWithSpectralEvolution) {
  const DiscreteGenerator dense(make_cauchy(1, 5), {1001});
  ASSERT_TRUE(dense.dense_spectrum());
  const Vec f0 = dense.sample(fields::sine(1, 0, 0, 1, 1.3));
  const std::vector<double> ts{0.02};
  const Vec spectral = dense.evolve(f0, ts)[0];
  const DiscreteGenerator big(make_cauchy(1, 5), {DiscreteGenerator::kDenseLimit1d + 1});
  ASSERT_FALSE(big.dense_spectrum());
  const Vec cn = big.evolve(big.sample(fields::sine(1, 0, 0, 1, 1.3)), ts)[0];
  // Compare at shared interior coordinates by interpolating the fine
  // solution; the zero-flux boundary layer depends on the step.
  for (int i = 0; i < dense.size(); i += 50) {
    const double x = dense.node(i)(0);
    if (std::abs(x) > dense.radius() - 1) continue;
    const double pos = (x + big.radius()) / big.step();
    const int j = std::min(static_cast<int>(pos), big.size() - 2);
    const double w = pos - j;
    EXPECT_NEAR((1 - w) * cn(j) + w * cn(j + 1), spectral(i), 2e-3);
  }
}

TEST(Generator, AlphaDerivativeDecaysAtTheEigenvalueRate) {
  const double beta = 5;
  const DiscreteGenerator g(make_cauchy(1, beta), {});
  std::vector<double> ts;
  for (int k = 0; k <= 10; ++k) ts.push_back(0.03 * k);
  const auto tr = g.alpha_trace(phi_square(), g.sample(fields::coordinate(1, 0)), ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    EXPECT_NEAR(tr.alpha_prime[k] / tr.alpha_prime[0], std::exp(-16 * ts[k]), 0.02 * std::exp(-16 * ts[k]));
  }
  EXPECT_TRUE(tr.bound_holds);
  EXPECT_NEAR(tr.decay_fit_rate, 16.0, 0.1);
}

TEST(Generator, AlphaTraceRejectsFlowsLeavingTheDomain) {
  const DiscreteGenerator g(make_cauchy(1, 5), {401});
  const std::vector<double> ts{0.0, 0.1};
  EXPECT_THROW(g.alpha_trace(phi_xlogx(), g.sample(fields::coordinate(1, 0)), ts), DomainError);
  const std::vector<double> bad{0.1, 0.05};
  EXPECT_THROW(g.alpha_trace(phi_square(), g.sample(fields::coordinate(1, 0)), bad), ParameterError);
  const std::vector<double> negative{-0.1};
  EXPECT_THROW(g.evolve(g.sample(fields::coordinate(1, 0)), negative), ParameterError);
}

TEST(Generator, PoissonSolveForCoordinate) {
  const double beta = 5;
  const DiscreteGenerator g(make_cauchy(1, beta), {});
  const Vec h = g.sample(fields::coordinate(1, 0));
  const Vec u = g.solve_poisson(h);
  EXPECT_LT(g.poisson_residual(u, h), 1e-8);
  EXPECT_NEAR(g.mean(u), 0.0, 1e-12);
  // L x = −2(β−1)x, so u = −x/(2(β−1)).
  for (int i : interior(g, 3.0)) EXPECT_NEAR(u(i), -h(i) / (2 * (beta - 1)), 1e-3);
  EXPECT_THROW(g.solve_poisson(h.array() + 0.1), ContractViolation);
}

TEST(Generator, CommutationIdentity) {
  const auto m1 = make_cauchy(1, 5);
  Mat a(2, 2);
  a << 1.2, 0.3, 0.3, 0.7;
  const auto m2 = make_quadratic(a, 6);
  Vec x1(1), x2(2);
  x1 << 0.4;
  x2 << -0.3, 0.8;
  EXPECT_LT(std::abs(commutation_residual(m1, fields::sine(1, 0, 0, 1, 1.1), 0, x1)), 1e-5);
  EXPECT_LT(std::abs(commutation_residual(m1, fields::polynomial(1, 0, {1, 0, 0, 1}), 0, x1)), 1e-5);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(commutation_residual(m2, fields::gaussian_bump(Vec::Constant(2, 0.1), 0, 1, 0.9), i, x2)),
              1e-5);
  }
}

TEST(Generator, TwoDimensionalGap) {
  const auto m = make_cauchy(2, 5);
  const DiscreteGenerator coarse(m, {31});
  ASSERT_TRUE(coarse.dense_spectrum());
  EXPECT_NEAR(coarse.lowest_modes(2).values(0), coarse.spectrum().values(1), 1e-8);
  const DiscreteGenerator fine(m, {121});
  ASSERT_FALSE(fine.dense_spectrum());
  // L x_i = −2(β−1)x_i in every dimension.
  EXPECT_NEAR(fine.spectral_gap() / 8.0, 1.0, 1e-2);
}

TEST(Generator, RejectsUnsupportedDimension) {
  EXPECT_THROW(DiscreteGenerator(make_cauchy(3, 4), {}), UnsupportedError);
  EXPECT_THROW(DiscreteGenerator(make_cauchy(1, 4), {2}), ParameterError);
}
