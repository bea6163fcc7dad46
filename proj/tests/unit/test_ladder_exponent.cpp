#include <gtest/gtest.h>

#include <cmath>

#include "levy_passage/fluctuation_stats.hpp"
#include "levy_passage/ladder_exponent.hpp"

using namespace levy_passage;

namespace {

SimConfig cfg(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  return c;
}

void check_shape(const LadderExponent& k) {
  EXPECT_NEAR(k(0.0, 0.0), k.q, 1e-12);
  const std::vector<double> grid = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = k(grid[i], grid[j]);
      EXPECT_GT(std::exp(-v), 0.0);
      EXPECT_LE(std::exp(-v), 1.0 + 1e-15);
      if (i > 0) EXPECT_GE(v, k(grid[i - 1], grid[j]) - 1e-12);
      if (j > 0) EXPECT_GE(v, k(grid[i], grid[j - 1]) - 1e-12);
    }
  }
  // Concavity along each axis on a uniform grid.
  for (double b : {0.0, 1.0}) {
    for (double a = 1.0; a < 10.0; a += 0.5) {
      EXPECT_LE(k(a, b) - k(a - 0.5, b), k(a - 0.5, b) - k(a - 1.0, b) + 1e-9);
    }
  }
}

}  // namespace

TEST(Phi, QuadraticOracle) {
  const auto m = brownian_drift(1.0, 2.0);  // psi(nu) = nu + nu^2
  EXPECT_EQ(phi(m, 0.0), 0.0);
  EXPECT_NEAR(phi(m, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(phi(m, 1.0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-12);
  const auto k = ladder_exponent(m);
  EXPECT_EQ(k.backend, LadderBackend::SpectrallyNegativeClosedForm);
  EXPECT_NEAR(k(2.0, 3.0), 4.0, 1e-12);
  EXPECT_NEAR(k(0.0, 1.7), 1.7, 1e-15);
}

TEST(Phi, NegativeDriftHasPositiveRoot) {
  // psi(nu) = -nu + nu^2 has its right root at 1.
  EXPECT_NEAR(phi(brownian_drift(-1.0, 2.0), 0.0), 1.0, 1e-12);
  const auto k = ladder_exponent(brownian_drift(-1.0, 2.0));
  EXPECT_NEAR(k.q, 1.0, 1e-12);
  EXPECT_FALSE(k.EL1_inv.has_value());
  EXPECT_THROW(phi(compound_poisson_drift(1.0, 1.0, JumpLaw::exponential(1.0, +1)), 1.0), PreconditionError);
}

TEST(Kappa, SpectrallyNegativeShape) { check_shape(ladder_exponent(spectrally_negative(2.0, 0.5, 1.0, 1.0))); }

TEST(Kappa, DriftMinusPoissonShape) { check_shape(ladder_exponent(drift_minus_poisson(2.0))); }

TEST(Kappa, RatioCriterion) {
  const auto k = ladder_exponent(spectrally_negative(2.0, 0.0, 1.0, 1.0));
  const double x = 1e4;
  for (double xi : {0.5, 1.0, 2.0}) EXPECT_NEAR(k(x, 0.0) / k(x, xi * x), 1.0 / (1.0 + 2.0 * xi), 0.02) << xi;
}

TEST(Kappa, DriftMinusPoissonStructure) {
  const auto k = ladder_exponent(drift_minus_poisson(2.0));
  EXPECT_EQ(k.backend, LadderBackend::DriftMinusPoissonClosedForm);
  EXPECT_EQ(k.q, 0.0);
  EXPECT_EQ(k.d_H, 2.0);
  EXPECT_EQ(k.d_L_inv, 1.0);
  EXPECT_NEAR(k(0.0, 1.3), 2.6, 1e-15);
  for (double a : {0.0, 0.7, 3.0}) EXPECT_NEAR((k(a, 1.5) - k(a, 0.5)) / 1.0, 2.0, 1e-12);
  // E L_1^{-1} = -d/da e^{-kappa(a,0)} at 0.
  const double h = 1e-6;
  const double slope = -(std::exp(-k(h, 0.0)) - std::exp(-k(0.0, 0.0))) / h;
  EXPECT_NEAR(slope, *k.EL1_inv, 1e-5);
  EXPECT_NEAR(*k.EL1_inv, 2.0, 1e-15);
}

TEST(Kappa, Tau1TransformMatchesMonteCarlo) {
  for (double alpha : {0.5, 2.0}) {
    const auto [est, se] = tau1_transform_mc(2.0, alpha, 20000, 99);
    EXPECT_NEAR(est, tau1_transform(2.0, alpha), 3.0 * se) << alpha;
  }
}

TEST(Kappa, NoClosedForm) {
  EXPECT_THROW(ladder_exponent(compound_poisson_drift(1.0, 1.0, JumpLaw::exponential(1.0, +1))),
               UnsupportedModelError);
}

TEST(Kappa, EmpiricalMatchesClosedForm) {
  const auto m = drift_minus_poisson(2.0);
  SimConfig c = cfg(5);
  c.horizon = 400.0;
  const auto emp = ladder_exponent_empirical(m, c, 200);
  const auto cf = ladder_exponent(m);
  EXPECT_NEAR(*emp.EL1_inv, *cf.EL1_inv, 0.05 * *cf.EL1_inv);
  EXPECT_NEAR(*emp.EH1, 2.0, 1e-9);
  for (double a : {0.2, 1.0, 3.0})
    for (double b : {0.0, 0.5}) EXPECT_NEAR(emp(a, b), cf(a, b), 0.03 * cf(a, b)) << a << " " << b;
}

TEST(Renewal, DriftMinusPoissonSmallLevels) {
  SimConfig c = cfg(6);
  c.horizon = 50.0;
  const auto v = renewal_estimate(drift_minus_poisson(2.0), c, {0.001, 0.01, 0.1, 1.0, 5.0}, 500);
  for (std::size_t i = 0; i < v.u_grid.size(); ++i) EXPECT_NEAR(v.values[i] / v.u_grid[i], 0.5, 1e-9);
  // Sandwich: V_H(u)/u (d_H + int_0^u Pi_H-bar + u q) with Pi_H = 0 and q = 0.
  for (std::size_t i = 0; i < v.u_grid.size(); ++i) EXPECT_NEAR(v.values[i] / v.u_grid[i] * 2.0, 1.0, 1e-9);
  // Wald: EH_1 = EX_1 EL_1^{-1}.
  const double ex1 = mean(drift_minus_poisson(2.0));
  EXPECT_NEAR(v.EH1, ex1 * v.EL1_inv, 3.0 * ex1 * v.EL1_inv_se + 1e-12);
  EXPECT_NEAR(v.EL1_inv, 2.0, 3.0 * v.EL1_inv_se + 0.01);
  EXPECT_LE(v(0.0), v(0.5));
}

TEST(Renewal, IdentityAgainstDirectMeanBrownian) {
  const auto m = brownian_drift(1.0, 1.0);
  SimConfig c = cfg(7);
  c.dt = 1e-2;
  c.horizon = 200.0;
  const auto v = renewal_estimate(m, c, {5.0, 20.0}, 300);
  EXPECT_EQ(v.normalization, LocalTimeNormalization::RunningMaximum);
  const auto direct = mean_exit_experiment(m, cfg(8), {5.0, 20.0}, 2000);
  for (std::size_t i = 0; i < 2; ++i) {
    const double u = v.u_grid[i];
    const double renewal = v.EL1_inv * v.values[i];
    const double se = v.EL1_inv_se * v.values[i];
    const double d = direct[i].ratio * u;
    const double dse = direct[i].se * u;
    EXPECT_NEAR(renewal, d, 3.0 * std::hypot(se, dse)) << u;
  }
}

TEST(Renewal, RequiresUpwardDrift) {
  EXPECT_THROW(renewal_estimate(cramer_lundberg(1, 2, 1), cfg(1), {1.0}, 10), PreconditionError);
}

TEST(LtIdentity, TrivialPoint) {
  const auto m = brownian_drift(1.0, 2.0);
  const auto k = ladder_exponent(m);
  LtParams p;
  p.mu = 1.0;
  EXPECT_NEAR(lt_rhs(k, p), 1.0, 1e-15);
  SimConfig c = cfg(9);
  c.dt = 1e-2;
  const auto rep = verify_lt_identity(m, k, p, 500, c);
  EXPECT_NEAR(rep.lhs, 1.0, 1e-15);
  EXPECT_EQ(rep.z, 0.0);
}

TEST(LtIdentity, BrownianTheta) {
  const auto m = brownian_drift(1.0, 2.0);
  const auto k = ladder_exponent(m);
  LtParams p;
  p.mu = 1.0;
  p.theta = 1.0;
  SimConfig c = cfg(10);
  c.dt = 1e-3;
  const auto rep = verify_lt_identity(m, k, p, 4000, c);
  EXPECT_LE(std::abs(rep.z), 3.0) << rep.lhs << " vs " << rep.rhs;
}

TEST(LtIdentity, DriftMinusPoissonCreeping) {
  const auto m = drift_minus_poisson(2.0);
  const auto k = ladder_exponent(m);
  LtParams p;
  p.mu = 1.0;
  p.rho = 2.0;
  EXPECT_NEAR(lt_rhs(k, p), 1.0, 1e-12);
  const auto rep = verify_lt_identity(m, k, p, 2000, cfg(11));
  EXPECT_NEAR(rep.lhs, 1.0, 1e-15);
}

TEST(LtIdentity, DriftMinusPoissonMixed) {
  const auto m = drift_minus_poisson(2.0);
  const auto k = ladder_exponent(m);
  const LtParams p{2.0, 1.0, 0.25, 0.5, 2.0};
  const auto rep = verify_lt_identity(m, k, p, 20000, cfg(12));
  EXPECT_LE(std::abs(rep.z), 3.0) << rep.lhs << " vs " << rep.rhs;
}

TEST(LtIdentity, Preconditions) {
  const auto k = ladder_exponent(drift_minus_poisson(2.0));
  EXPECT_THROW(lt_rhs(k, LtParams{0.0, 0, 0, 0, 0}), PreconditionError);
  EXPECT_THROW(lt_rhs(k, LtParams{1.0, 1.0, 0, 0, 0}), PreconditionError);
  EXPECT_THROW(lt_rhs(k, LtParams{1.0, -1.0, 0, 0, 0}), PreconditionError);
}
