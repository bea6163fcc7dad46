#include <gtest/gtest.h>

#include <cmath>

#include "levy_passage/expression.hpp"

using namespace levy_passage;

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3")(0.0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2) * 3")(0.0), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-x / 4")(2.0), -0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("2 - 3 - 4")(0.0), -5.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8 / 4 / 2")(0.0), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e-1 * x")(10.0), 1.5);
}

TEST(Expression, Functions) {
  const auto e = Expression::parse("1 / (x * -ln(x))");
  EXPECT_NEAR(e(0.25), 1.0 / (0.25 * std::log(4.0)), 1e-15);
  EXPECT_NEAR(Expression::parse("pow(x, 1.5)")(4.0), 8.0, 1e-15);
  EXPECT_NEAR(Expression::parse("exp(-2*x)")(0.5), std::exp(-1.0), 1e-15);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("1 +"), ExpressionError);
  EXPECT_THROW(Expression::parse("sin(x)"), ExpressionError);
  EXPECT_THROW(Expression::parse("(x"), ExpressionError);
  EXPECT_THROW(Expression::parse("x x"), ExpressionError);
  EXPECT_THROW(Expression::parse("pow(x)"), ExpressionError);
}

TEST(PiecewiseTail, PiecesAndSupport) {
  PiecewiseTail t({{1.0, Expression::parse("2 - x")}, {3.0, Expression::parse("1 / x")}});
  EXPECT_DOUBLE_EQ(t(0.5), 1.5);
  EXPECT_DOUBLE_EQ(t(2.0), 0.5);
  EXPECT_DOUBLE_EQ(t(3.0), 0.0);
  EXPECT_DOUBLE_EQ(t.left_limit(0), 1.0);
  EXPECT_DOUBLE_EQ(t.support_end(), 3.0);
  EXPECT_THROW(PiecewiseTail({{2.0, Expression::parse("1")}, {1.0, Expression::parse("1")}}), PreconditionError);
}
