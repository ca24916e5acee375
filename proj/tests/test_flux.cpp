#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "leibenson/flux.hpp"

using namespace leibenson;

TEST(Truncate, ClampsToTheBand) {
  const RegLevel two(2.0);
  EXPECT_EQ(truncate(0.5, two), 0.5);
  EXPECT_EQ(truncate(5.0, two), 2.0);
  EXPECT_EQ(truncate(0.1, two), 0.5);
}

TEST(RegFlux, UnitQReducesToPLaplaceFlux) {
  const LeibensonParams par(3.0, 1.0);
  for (double n : {2.0, 10.0, 1e4}) EXPECT_DOUBLE_EQ(reg_flux(0.7, 2.0, RegLevel(n), par), 4.0);
}

TEST(RegFlux, PorousMediumSubstitution) {
  EXPECT_DOUBLE_EQ(reg_flux(3.0, 1.0, RegLevel(10.0), LeibensonParams(2.0, 2.0)), 6.0);
}

TEST(RegFlux, NegativeExponentOnTheDiffusivity) {
  // (1/2)^2 * 4^{(-1/2)(2)} * (-1) = -1/16
  EXPECT_NEAR(reg_flux(4.0, -1.0, RegLevel(10.0), LeibensonParams(3.0, 0.5)), -1.0 / 16.0, 1e-15);
}

TEST(RegFlux, ZeroGradientGivesZeroForAllP) {
  for (double p : {1.2, 1.5, 2.0, 3.0})
    EXPECT_EQ(reg_flux(0.3, 0.0, RegLevel(10.0), LeibensonParams(p, 1.3)), 0.0);
}

TEST(LimitFlux, Examples) {
  EXPECT_DOUBLE_EQ(limit_flux(0.7, LeibensonParams(2.0, 1.0)), 0.7);
  EXPECT_DOUBLE_EQ(limit_flux(-2.0, LeibensonParams(3.0, 1.0)), -4.0);
  EXPECT_DOUBLE_EQ(limit_flux(4.0, LeibensonParams(1.5, 1.0)), 2.0);
}

TEST(LimitFlux, FiniteAtZeroForSingularP) {
  const LeibensonParams par(1.3, 1.0);
  EXPECT_EQ(limit_flux(0.0, par), 0.0);
  const double d = limit_flux_derivative(0.0, par, 1e-10);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_GT(d, 0.0);
}

TEST(LimitFlux, DerivativeMatchesFiniteDifferenceAwayFromZero) {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const LeibensonParams par(p, 1.0);
    for (double w : {-2.0, -0.3, 0.4, 1.7}) {
      const double h = 1e-6;
      const double fd = (limit_flux(w + h, par) - limit_flux(w - h, par)) / (2 * h);
      EXPECT_NEAR(limit_flux_derivative(w, par, 0.0), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Classify, RegimeFollowsTheSignOfDelta) {
  EXPECT_EQ(classify(LeibensonParams(3.0, 1.0)), Regime::slow);
  EXPECT_EQ(LeibensonParams(3.0, 1.0).delta(), 1.0);
  EXPECT_EQ(classify(LeibensonParams(2.0, 1.0)), Regime::critical);
  EXPECT_EQ(classify(LeibensonParams(2.0, 0.5)), Regime::fast);
  EXPECT_EQ(LeibensonParams(2.0, 0.5).delta(), -0.5);
}

TEST(LeibensonParams, StoredDeltaMatchesRecomputation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> P(1.01, 5.0), Q(0.05, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = P(rng), q = Q(rng);
    const LeibensonParams par(p, q);
    EXPECT_EQ(par.delta(), q * (p - 1.0) - 1.0);
    EXPECT_EQ(par.pq_ok(), p * q >= 1.0);
    EXPECT_EQ(par.regime() == Regime::slow, par.delta() > 0.0);
  }
}

TEST(LeibensonParams, RejectsInvalidExponents) {
  EXPECT_THROW(LeibensonParams(1.0, 1.0), ConfigError);
  EXPECT_THROW(LeibensonParams(2.0, 0.0), ConfigError);
  EXPECT_THROW(LeibensonParams(NAN, 1.0), ConfigError);
  EXPECT_THROW(RegLevel(1.0), ConfigError);
}

// Chain rule behind the limit flux: inside (1/N, N) the regularized flux of (u, u') equals the
// limit flux of (u^q)' = q u^{q-1} u'.
TEST(FluxProperty, RegularizedEqualsLimitInsideTheBand) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> P(1.1, 4.0), Q(0.2, 3.0), G(-3.0, 3.0), U(-2.0, 2.0);
  const RegLevel reg(1e3);
  for (int i = 0; i < 10000; ++i) {
    const LeibensonParams par(P(rng), Q(rng));
    const double u = std::pow(10.0, U(rng)), g = G(rng);
    const double w = par.q() * std::pow(u, par.q() - 1.0) * g;
    const double a = reg_flux(u, g, reg, par), b = limit_flux(w, par);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(b)));
  }
}

TEST(FluxProperty, StrictMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> W(-5.0, 5.0);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const LeibensonParams par(p, 1.0);
    for (int i = 0; i < 10000; ++i) {
      const double xi = W(rng), eta = W(rng);
      if (xi == eta) continue;
      EXPECT_GT((limit_flux(xi, par) - limit_flux(eta, par)) * (xi - eta), 0.0);
    }
  }
}

TEST(FluxProperty, OddSymmetry) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> W(-5.0, 5.0), P(1.1, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const LeibensonParams par(P(rng), 1.0);
    const double w = W(rng);
    EXPECT_EQ(limit_flux(-w, par), -limit_flux(w, par));
  }
}

TEST(FluxProperty, CoefficientDerivativeMatchesFiniteDifference) {
  const LeibensonParams par(2.5, 1.7);
  const RegLevel reg(50.0);
  for (double u : {0.05, 0.4, 3.0, 20.0}) {
    const double h = 1e-6 * u;
    const double fd = (reg_coefficient(u + h, reg, par) - reg_coefficient(u - h, reg, par)) / (2 * h);
    EXPECT_NEAR(reg_coefficient_derivative(u, reg, par), fd, 1e-6 * std::abs(fd));
  }
  EXPECT_EQ(reg_coefficient_derivative(0.001, reg, par), 0.0);
  EXPECT_EQ(reg_coefficient_derivative(100.0, reg, par), 0.0);
}
