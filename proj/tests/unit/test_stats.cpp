#include <gtest/gtest.h>

#include <vector>

#include "levy_passage/stats.hpp"

using namespace levy_passage;

TEST(RunningStats, MergeMatchesSinglePass) {
  RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double v = std::sin(0.37 * i) * 3.0 + i * 1e-3;
    all.add(v);
    (i < 400 ? left : right).add(v);
  }
  RunningStats merged = left;
  merged.merge(right);
  EXPECT_EQ(merged.count(), all.count());
  EXPECT_NEAR(merged.mean(), all.mean(), 1e-13);
  EXPECT_NEAR(merged.variance(), all.variance(), 1e-12);
  RunningStats other = right;
  other.merge(left);
  EXPECT_NEAR(other.mean(), merged.mean(), 1e-13);
}

TEST(RunningStats, StandardErrorDefinition) {
  RunningStats s;
  for (double v : {1.0, 2.0, 3.0, 4.0}) s.add(v);
  EXPECT_NEAR(s.variance(), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.se(), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(Quantile, TypeSeven) {
  std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(median(v), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.1), 1.3);
  EXPECT_THROW(quantile({}, 0.5), PreconditionError);
}

TEST(RatioStats, ExactRatioHasZeroError) {
  RatioStats r;
  for (int i = 1; i <= 10; ++i) r.add(2.0 * i, i);
  EXPECT_DOUBLE_EQ(r.ratio(), 2.0);
  EXPECT_NEAR(r.se(), 0.0, 1e-12);
}
