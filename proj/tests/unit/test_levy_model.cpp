#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "levy_passage/levy_model.hpp"

using namespace levy_passage;

namespace {

std::vector<LevyModel> builtin_models() {
  return {brownian_drift(1.0, 1.0),
          brownian_drift(-1.0, 2.0),
          drift_minus_poisson(2.0),
          cramer_lundberg(1.0, 2.0, 1.0),
          spectrally_negative(2.0, 0.0, 1.0, 1.0),
          compound_poisson_drift(0.0, 1.0, JumpLaw::uniform(0.0, 1.0)),
          compound_poisson_drift(0.3, 2.0, JumpLaw::normal(0.2, 1.5), 0.5),
          compound_poisson_drift(-0.1, 1.5, JumpLaw::double_exponential(0.4, 3.0, 2.0)),
          make_appendix_ce1(),
          make_appendix_ce2(0.75, LimitPoint::Zero),
          make_appendix_ce2(0.75, LimitPoint::Infinity)};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

double ce2_L(double x, double beta) { return std::exp(std::pow(-std::log(x), beta)); }

}  // namespace

TEST(TruncatedMean, BrownianDriftIsConstant) {
  const auto m = brownian_drift(1.0, 1.0);
  for (double x : {1e-6, 0.5, 1.0, 7.0, 1e6}) EXPECT_DOUBLE_EQ(truncated_mean(m, x), 1.0);
}

TEST(TruncatedMean, DriftMinusPoisson) {
  const auto m = drift_minus_poisson(2.0);
  for (double x : {1.0, 1.5, 10.0, 1e5}) EXPECT_NEAR(truncated_mean(m, x), 1.0, 1e-12);
  // Below the jump size the unit atom is not yet subtracted: A(x) = a - x.
  for (double x : {1e-8, 0.1, 0.5, 0.99}) EXPECT_NEAR(truncated_mean(m, x), 2.0 - x, 1e-10);
}

TEST(TruncatedMean, AppendixCe1TendsToMinusOne) {
  const auto m = make_appendix_ce1();
  // Below the flat part of the tails, A(x) = -1 - ln 2 / |ln x| exactly.
  for (double x : {1e-3, 1e-6, 1e-12}) {
    const double expect = -1.0 - std::log(2.0) / std::abs(std::log(x));
    EXPECT_NEAR(truncated_mean(m, x), expect, 1e-8);
  }
  EXPECT_NEAR(truncated_mean(m, 1e-200), -1.0, 0.005);
}

TEST(TruncatedMean, AppendixCe2ClosedForm) {
  const double beta = 0.75;
  const auto m = make_appendix_ce2(beta, LimitPoint::Zero);
  for (double x : {0.3, 1e-2, 1e-5, 1e-8, 1e-12}) {
    const double expect = std::exp(1.0) - ce2_L(x, beta);
    EXPECT_NEAR(truncated_mean(m, x), expect, 1e-8 * (1.0 + std::abs(expect)));
  }
  EXPECT_LT(truncated_mean(m, 1e-12), truncated_mean(m, 1e-8));
}

TEST(TruncatedMean, RejectsNonpositiveX) {
  EXPECT_THROW(truncated_mean(brownian_drift(1, 1), 0.0), PreconditionError);
}

TEST(TruncatedMean, DualFormsAgree) {
  for (const auto& m : builtin_models()) {
    for (double x : log_grid(1e-6, 1e6, 25)) {
      const double a1 = truncated_mean(m, x);
      const double a2 = truncated_mean_direct(m, x);
      EXPECT_NEAR(a1, a2, 1e-6 * (1.0 + std::abs(a1))) << m.name() << " at x=" << x;
    }
  }
}

TEST(QuadraticVariation, Examples) {
  EXPECT_DOUBLE_EQ(quadratic_variation_trunc(brownian_drift(1.0, 1.0), 3.0), 1.0);
  const auto dmp = drift_minus_poisson(2.0);
  EXPECT_NEAR(quadratic_variation_trunc(dmp, 0.5), 0.0, 1e-14);
  EXPECT_NEAR(quadratic_variation_trunc(dmp, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(quadratic_variation_trunc(dmp, 3.0), 1.0, 1e-12);
  const auto uni = compound_poisson_drift(0.0, 1.0, JumpLaw::uniform(0.0, 1.0));
  EXPECT_NEAR(quadratic_variation_trunc(uni, 0.5), 1.0 / 24.0, 1e-12);
}

TEST(QuadraticVariation, IntegrationByPartsMatchesDirectMoment) {
  for (const auto& m : builtin_models()) {
    for (double x : log_grid(1e-5, 1e3, 13)) {
      const double v = quadratic_variation_trunc(m, x);
      const double direct = m.sigma2() + partial_moment(m, 0.0, x, 2);
      EXPECT_NEAR(v, direct, 1e-6 * std::max(1e-12, std::abs(direct)) + 1e-14) << m.name() << " at x=" << x;
    }
  }
}

TEST(Cumulant, Examples) {
  const auto bm = brownian_drift(-1.0, 2.0);
  EXPECT_DOUBLE_EQ(cumulant(bm, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(cumulant(bm, 3.0), -3.0 + 9.0);
  const auto cl = cramer_lundberg(1.0, 2.0, 1.0);
  EXPECT_NEAR(cumulant(cl, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(cumulant(cl, 0.5), 0.5 / 1.5 - 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(cumulant(cl, 2.0)));
  for (const auto& m : builtin_models()) EXPECT_EQ(cumulant(m, 0.0), 0.0) << m.name();
}

TEST(Cumulant, GenericQuadratureMatchesClosedForms) {
  for (const auto& m : builtin_models()) {
    if (!m.cumulant_closed()) continue;
    for (double nu : {-1.5, -0.4, 0.3, 0.9, 1.7}) {
      const double closed = cumulant(m, nu);
      const double generic = detail::generic_cumulant(m, nu);
      if (std::isinf(closed)) {
        EXPECT_TRUE(std::isinf(generic)) << m.name() << " nu=" << nu;
        continue;
      }
      EXPECT_NEAR(generic, closed, 1e-8 * (1.0 + std::abs(closed))) << m.name() << " nu=" << nu;
      const double dclosed = cumulant_derivative(m, nu);
      const double dgeneric = detail::generic_cumulant_derivative(m, nu);
      EXPECT_NEAR(dgeneric, dclosed, 1e-7 * (1.0 + std::abs(dclosed))) << m.name() << " nu=" << nu;
    }
  }
}

TEST(Cumulant, DriftMinusPoissonClosedForm) {
  const auto m = drift_minus_poisson(2.0);
  for (double nu : {-2.0, 0.5, 3.0}) EXPECT_NEAR(cumulant(m, nu), 2.0 * nu + std::exp(-nu) - 1.0, 1e-13);
}

TEST(Cumulant, ConvexOnFiniteDomain) {
  for (const auto& m : builtin_models()) {
    const double h = 0.05;
    std::vector<double> vals;
    for (int i = -40; i <= 40; ++i) vals.push_back(cumulant(m, i * h));
    for (std::size_t i = 1; i + 1 < vals.size(); ++i) {
      if (!std::isfinite(vals[i - 1]) || !std::isfinite(vals[i]) || !std::isfinite(vals[i + 1])) continue;
      EXPECT_GE(vals[i - 1] - 2 * vals[i] + vals[i + 1], -1e-9) << m.name() << " at nu=" << (static_cast<int>(i) - 40) * h;
    }
  }
}

TEST(Cumulant, HeavyTailsGiveInfinity) {
  const auto ce2 = make_appendix_ce2(0.75, LimitPoint::Infinity);
  EXPECT_TRUE(std::isinf(cumulant(ce2, 0.1)));
  EXPECT_TRUE(std::isinf(cumulant(ce2, -0.1)));
}

TEST(Mean, ClosedAndGeneric) {
  EXPECT_NEAR(mean(cramer_lundberg(1.0, 2.0, 1.0)), -0.5, 1e-15);
  EXPECT_NEAR(mean(drift_minus_poisson(3.0)), 2.0, 1e-15);
  EXPECT_NEAR(mean(make_appendix_ce2(0.75, LimitPoint::Zero)), 0.0, 1e-9);
  EXPECT_FALSE(finite_abs_mean(make_appendix_ce2(0.75, LimitPoint::Infinity)));
}

TEST(Tails, MonotoneOnGrid) {
  for (const auto& m : builtin_models()) {
    double pp = kInf, pn = kInf;
    for (double x : log_grid(1e-9, 1e9, 400)) {
      const double p = m.pos_tail(x), n = m.neg_tail(x);
      EXPECT_LE(p, pp * (1 + 1e-12)) << m.name() << " x=" << x;
      EXPECT_LE(n, pn * (1 + 1e-12)) << m.name() << " x=" << x;
      pp = p;
      pn = n;
    }
  }
}

TEST(Integrability, BoundedVariationFlags) {
  EXPECT_TRUE(std::isinf(bv_integral(make_appendix_ce1())));
  EXPECT_TRUE(std::isinf(bv_integral(make_appendix_ce2(0.75, LimitPoint::Zero))));
  for (const auto& m : builtin_models())
    if (m.measure().drift_bv) EXPECT_TRUE(std::isfinite(bv_integral(m))) << m.name();
  for (const auto& m : builtin_models()) EXPECT_TRUE(std::isfinite(quadratic_integral(m))) << m.name();
}

TEST(AppendixCe1, TailValues) {
  const auto m = make_appendix_ce1();
  EXPECT_NEAR(m.pos_tail(0.25), 1.0 / (0.25 * std::log(4.0)), 1e-12);
  EXPECT_NEAR(m.pos_tail(0.25), 2.885390, 1e-6);
  EXPECT_EQ(m.pos_tail(0.5), 0.0);
  EXPECT_EQ(m.neg_tail(0.7), 0.0);
  EXPECT_NEAR(m.neg_tail(0.01), 1.0 / (0.01 * std::log(100.0)) + std::log(2.0) / (0.01 * std::pow(std::log(0.01), 2)), 1e-9);
  EXPECT_EQ(m.sigma2(), 0.0);
  EXPECT_FALSE(m.drift_bv());
}

TEST(AppendixCe2, TailRatioAndAsymptotics) {
  const auto m = make_appendix_ce2(0.75, LimitPoint::Zero);
  for (double x : {1e-2, 1e-6, 1e-10}) EXPECT_NEAR(m.neg_tail(x) / m.pos_tail(x), 0.5, 1e-15);
  const double x = 1e-8;
  const double ratio = -truncated_mean(m, x) / (x * m.tail(x));
  const double asym = std::pow(-std::log(x), 0.25) / 2.25;
  EXPECT_NEAR(asym, 0.9207, 5e-4);
  EXPECT_NEAR(ratio, asym, 0.1 * asym);
  EXPECT_THROW(make_appendix_ce2(0.5, LimitPoint::Zero), PreconditionError);
  EXPECT_THROW(make_appendix_ce2(1.0, LimitPoint::Infinity), PreconditionError);
}

TEST(AppendixCe2, LargeTimeStepLaw) {
  const auto m = make_appendix_ce2(0.75, LimitPoint::Infinity);
  EXPECT_NEAR(m.pos_tail(1.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.neg_tail(std::exp(1.0)), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.neg_tail(50.0) / m.pos_tail(50.0), 2.0, 1e-14);
  EXPECT_DOUBLE_EQ(m.measure().total_mass, 1.0);
  Rng rng(5, 0);
  int up = 0;
  const int n = 20000;
  int above = 0;
  for (int i = 0; i < n; ++i) {
    const double j = m.measure().sample(rng, 0.0);
    ASSERT_GE(std::abs(j), std::exp(1.0) * (1 - 1e-12));
    if (j > 0) ++up;
    if (std::abs(j) > 100.0) ++above;
  }
  EXPECT_NEAR(up / double(n), 1.0 / 3.0, 4 * std::sqrt(2.0 / 9.0 / n));
  const double p100 = m.tail(100.0);
  EXPECT_NEAR(above / double(n), p100, 4 * std::sqrt(p100 * (1 - p100) / n));
}

TEST(Construction, Preconditions) {
  EXPECT_THROW(drift_minus_poisson(1.0), PreconditionError);
  EXPECT_THROW(drift_minus_poisson(0.5), PreconditionError);
  EXPECT_THROW(brownian_drift(0.0, 0.0), PreconditionError);
  EXPECT_THROW(brownian_drift(-1.0, 0.0), PreconditionError);
  EXPECT_THROW(compound_poisson_drift(-1.0, 1.0, JumpLaw::exponential(1.0, -1)), PreconditionError);
  EXPECT_THROW(spectrally_negative(0.0, 0.0, 1.0, 1.0), PreconditionError);
  EXPECT_NO_THROW(brownian_drift(2.0, 0.0));
  EXPECT_NO_THROW(spectrally_negative(0.0, 1.0, 1.0, 1.0));
}

TEST(Custom, MatchesCompoundPoisson) {
  PiecewiseTail pos({{kInf, Expression::parse("exp(-2*x)")}});
  PiecewiseTail neg;
  const auto custom = make_custom(0.0, 0.0, pos, neg);
  const auto cp = compound_poisson_drift(-0.5, 1.0, JumpLaw::exponential(2.0, +1));
  // Same measure; gamma of the compound Poisson model is drift + E[J; J<=1].
  const auto cp_same = compound_poisson_drift(-(cp.gamma() - (-0.5)), 1.0, JumpLaw::exponential(2.0, +1));
  EXPECT_NEAR(cp_same.gamma(), 0.0, 1e-12);
  for (double x : {1e-4, 0.3, 1.0, 4.0, 100.0}) {
    EXPECT_NEAR(truncated_mean(custom, x), truncated_mean(cp_same, x), 1e-9);
    EXPECT_NEAR(quadratic_variation_trunc(custom, x), quadratic_variation_trunc(cp_same, x), 1e-9);
  }
  for (double nu : {-1.0, 0.5, 1.5}) EXPECT_NEAR(cumulant(custom, nu), cumulant(cp_same, nu), 1e-8);
  ASSERT_TRUE(custom.drift_bv());
  EXPECT_NEAR(*custom.drift_bv(), *cp_same.drift_bv(), 1e-9);
}

TEST(Custom, RejectsIncreasingTail) {
  PiecewiseTail bad({{1.0, Expression::parse("x")}});
  EXPECT_THROW(make_custom(1.0, 0.0, bad, PiecewiseTail{}), PreconditionError);
  PiecewiseTail jump_up({{1.0, Expression::parse("1")}, {2.0, Expression::parse("5")}});
  EXPECT_THROW(make_custom(1.0, 0.0, jump_up, PiecewiseTail{}), PreconditionError);
}

TEST(Custom, MeasureEvaluationError) {
  PiecewiseTail nan_tail({{1.0, Expression::parse("ln(x - 2)")}});
  EXPECT_THROW(make_custom(1.0, 0.0, nan_tail, PiecewiseTail{}), MeasureEvaluationError);
}

TEST(Classifier, BrownianDrift) {
  const auto m = brownian_drift(1.0, 1.0);
  const auto large = classify_stability(m, Regime::ProbLarge, default_grid(Regime::ProbLarge));
  EXPECT_EQ(large.holds, Verdict::Yes);
  EXPECT_DOUBLE_EQ(large.c, 1.0);
  const auto small = classify_stability(m, Regime::ProbSmall, default_grid(Regime::ProbSmall));
  EXPECT_EQ(small.holds, Verdict::No);
  EXPECT_EQ(large.evidence.size(), default_grid(Regime::ProbLarge).size());
}

TEST(Classifier, DriftMinusPoissonAllRegimes) {
  const double a = 2.0;
  const auto m = drift_minus_poisson(a);
  // Occupation-time normalisation: d_H = a, E L_1^{-1} = 1 + E tau_1 = a / (a - 1).
  const LadderMoments lm{a, a / (a - 1.0)};
  struct Case { Regime r; double c; };
  for (const auto& [r, c] : std::vector<Case>{{Regime::ProbLarge, 1.0}, {Regime::ProbSmall, 2.0},
                                              {Regime::ASLarge, 1.0}, {Regime::ASSmall, 2.0},
                                              {Regime::MeanLarge, 1.0}, {Regime::MeanSmall, 1.0}}) {
    const auto v = classify_stability(m, r, default_grid(r), lm);
    EXPECT_EQ(v.holds, Verdict::Yes) << to_string(r) << ": " << v.reason;
    EXPECT_NEAR(v.c, c, 0.02 * c) << to_string(r);
  }
  EXPECT_EQ(classify_stability(m, Regime::MeanSmall, default_grid(Regime::MeanSmall)).holds, Verdict::Inconclusive);
}

TEST(Classifier, AppendixModels) {
  const auto ce1 = classify_stability(make_appendix_ce1(), Regime::ProbSmall, default_grid(Regime::ProbSmall));
  EXPECT_EQ(ce1.holds, Verdict::No);
  EXPECT_NEAR(ce1.limit_A, -1.0, 0.05);
  const auto ce2 = classify_stability(make_appendix_ce2(0.75, LimitPoint::Zero), Regime::ProbSmall,
                                      default_grid(Regime::ProbSmall));
  EXPECT_EQ(ce2.holds, Verdict::No);
  EXPECT_EQ(ce2.limit_A, -kInf);
  const auto ce2i = classify_stability(make_appendix_ce2(0.75, LimitPoint::Infinity), Regime::ProbLarge,
                                       default_grid(Regime::ProbLarge));
  EXPECT_EQ(ce2i.holds, Verdict::No);
  EXPECT_EQ(ce2i.limit_A, -kInf);
}

TEST(Classifier, GridPreconditions) {
  const auto m = brownian_drift(1.0, 1.0);
  EXPECT_THROW(classify_stability(m, Regime::ProbLarge, {1, 10, 100}), PreconditionError);
  EXPECT_THROW(classify_stability(m, Regime::ProbLarge, log_grid(1, 100, 10)), PreconditionError);
  EXPECT_THROW(classify_stability(m, Regime::ProbSmall, log_grid(1e-8, 1, 10)), PreconditionError);
}
