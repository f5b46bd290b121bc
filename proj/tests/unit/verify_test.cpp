#include <gtest/gtest.h>

#include <cmath>

#include "fred/error.hpp"
#include "fred/verify.hpp"

namespace fred::verify {
namespace {

TEST(Verify, SampleSizeCheckPasses) {
  const auto r = check_sample_size();
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Verify, SmallEstimatorRunPasses) {
  EstimatorOptions o;
  o.instances = 4;
  o.samples = 5000;
  o.repeats = 4;
  o.tolerance = 0.05;
  o.seed = 3;
  const auto r = check_estimator_consistency(o);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Verify, EstimatorFailsWithImpossibleTolerance) {
  EstimatorOptions o;
  o.instances = 3;
  o.samples = 200;
  o.repeats = 1;
  o.tolerance = 1e-9;
  EXPECT_FALSE(check_estimator_consistency(o).passed);
}

TEST(Verify, CoverageSmallRun) {
  CoverageOptions o;
  o.trials = 300;
  o.alpha = 0.95;
  EXPECT_TRUE(check_sample_coverage(o).passed);
}

TEST(Verify, CrossOracleSmallRun) {
  CrossOracleOptions o;
  o.instances = 10;
  o.max_positions = 8;
  EXPECT_TRUE(check_cross_oracle(o).passed);
}

TEST(Verify, MaskEquivalence) { EXPECT_TRUE(check_mask_equivalence(5, 10).passed); }

TEST(Verify, ShortcutSmallRun) {
  ShortcutOptions o;
  o.instances = 10;
  o.seed = 8;
  const auto r = check_shortcut_models(o);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Verify, LinearSmallRun) {
  LinearOptions o;
  o.instances = 10;
  o.samples = 50000;
  o.seed = 4;
  const auto r = check_linear_models(o);
  EXPECT_TRUE(r.passed) << r.detail;
}

// Fitting the models with an unsmoothed idf breaks the expected greedy order.
TEST(Verify, LinearCheckCatchesWrongIdf) {
  LinearOptions o;
  o.instances = 10;
  o.samples = 50000;
  o.seed = 4;
  o.idf = [](std::size_t n, std::size_t df) {
    return std::log(static_cast<double>(n) / static_cast<double>(df));
  };
  EXPECT_FALSE(check_linear_models(o).passed);
}

TEST(Verify, RunChecksByName) {
  const auto names = check_names();
  EXPECT_EQ(names.size(), 7u);
  const auto results = run_checks({"sample-size", "mask-equivalence"}, 1);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].name, "sample-size");
  EXPECT_EQ(results[1].name, "mask-equivalence");
  const auto j = to_json(results);
  EXPECT_TRUE(j.is_object() || j.is_array());
  EXPECT_THROW(run_checks({"nope"}, 1), ConfigError);
}

}  // namespace
}  // namespace fred::verify
