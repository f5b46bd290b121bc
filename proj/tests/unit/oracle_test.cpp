#include <gtest/gtest.h>

#include <cmath>

#include "fred/error.hpp"
#include "fred/oracle.hpp"
#include "fred/rng.hpp"
#include "test_models.hpp"

namespace fred::oracle {
namespace {

using predictor::LinearTfIdfModel;
using predictor::ShortcutModel;

TEST(NeumaierSum, RecoversCancelledTerms) {
  NeumaierSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(Exact, ShortcutHandValues) {
  ShortcutModel model({"a", "b"});
  const auto xi = text::tokenize("a b b");
  ExactDistribution dist(xi, model, 0.5, 1);
  EXPECT_NEAR(dist.total_probability(), 1.0, 1e-15);
  // P(a kept) * P(not both b masked) = 1/2 * 3/4.
  EXPECT_DOUBLE_EQ(dist.expected_prediction(), 0.375);
  const std::size_t a[] = {0}, b1[] = {1}, bb[] = {1, 2};
  EXPECT_DOUBLE_EQ(dist.candidate_drop(a), 0.375);
  EXPECT_DOUBLE_EQ(dist.candidate_drop(b1), 0.375 - 0.25);
  EXPECT_DOUBLE_EQ(dist.candidate_drop(bb), 0.375);
  EXPECT_DOUBLE_EQ(dist.exclusion_probability(bb), 0.25);
  EXPECT_DOUBLE_EQ(exact_candidate_drop(model, xi, b1, 0.5, 1), 0.125);
}

TEST(Exact, ShortcutClosedForm) {
  const std::size_t m[] = {1, 2};
  const std::size_t only_a[] = {1, 0}, one_b[] = {0, 1}, both_b[] = {0, 2};
  EXPECT_DOUBLE_EQ(shortcut_drop_closed_form(m, only_a, 0.5), 0.375);
  EXPECT_DOUBLE_EQ(shortcut_drop_closed_form(m, one_b, 0.5), 0.125);
  EXPECT_DOUBLE_EQ(shortcut_drop_closed_form(m, both_b, 0.5), 0.375);
  const std::size_t too_many[] = {2, 0};
  EXPECT_THROW(shortcut_drop_closed_form(m, too_many, 0.5), InvalidInputError);
}

TEST(Exact, LinearHandValue) {
  // Identity link, unit idf: f = 2 * m_x - 1 * m_y + 0.5.
  LinearTfIdfModel model(text::TfIdfVectorizer({{"x", 0}, {"y", 1}}, {1.0, 1.0}),
                         {{"x", 2.0}, {"y", -1.0}}, 0.5);
  const auto xi = text::tokenize("x y x");
  ExactDistribution dist(xi, model, 0.25, 0);
  EXPECT_NEAR(dist.expected_prediction(), 0.75 * (2 + 2 - 1) + 0.5, 1e-15);
  const std::size_t xs[] = {0, 2}, y[] = {1};
  EXPECT_NEAR(dist.candidate_drop(xs), 0.75 * 4.0, 1e-15);
  EXPECT_NEAR(dist.candidate_drop(y), -0.75, 1e-15);
  const double w[] = {2.0, -1.0};
  const std::size_t cx[] = {2, 0}, cy[] = {0, 1};
  EXPECT_NEAR(linear_drop_closed_form(w, cx, 0.75), 3.0, 1e-15);
  EXPECT_NEAR(linear_drop_closed_form(w, cy, 0.75), -0.75, 1e-15);
}

TEST(Exact, MeanMatchesDirectEnumeration) {
  Rng rng(5);
  testing::CountModel model;
  const auto xi = text::tokenize("a b c d e f");
  const double p = 0.3;
  ExactDistribution dist(xi, model, p, 0);
  double mean = 0;
  for (std::size_t s = 0; s < 64; ++s) {
    double prob = 1, kept = 0;
    for (int i = 0; i < 6; ++i) {
      const bool masked = (s >> i) & 1;
      prob *= masked ? p : 1 - p;
      kept += !masked;
    }
    mean += prob * kept;
  }
  EXPECT_NEAR(dist.expected_prediction(), mean, 1e-14);
  EXPECT_NEAR(mean, 6 * 0.7, 1e-14);
}

TEST(Exact, DeleteMatchesMaskForLinearModels) {
  const auto vec = text::TfIdfVectorizer::fit(text::Corpus::from_texts({"a b", "b c", "c d a"}));
  LinearTfIdfModel model(vec, {{"a", 1.5}, {"b", -0.5}, {"c", 0.25}, {"d", 2.0}}, 0.1);
  const auto xi = text::tokenize("a b c d a c");
  ExactDistribution masked(xi, model, 0.5, 0, Removal::kMask);
  ExactDistribution deleted(xi, model, 0.5, 0, Removal::kDelete);
  for (std::size_t s = 0; s < 64; ++s) EXPECT_EQ(masked.prediction(s), deleted.prediction(s));
}

TEST(Exact, ConditionalVarianceOfConstantIsZero) {
  testing::ConstantModel model({0.3, 0.7});
  ExactDistribution dist(text::tokenize("a b c"), model, 0.5, 1);
  const std::size_t c[] = {0, 2};
  EXPECT_NEAR(dist.conditional_variance(c), 0.0, 1e-15);
  EXPECT_NEAR(dist.candidate_drop(c), 0.0, 1e-15);
}

TEST(Exact, ConditionalVarianceOfCount) {
  testing::CountModel model;
  ExactDistribution dist(text::tokenize("a b c d"), model, 0.5, 0);
  const std::size_t c[] = {0};
  // Three free Bernoulli(1/2) positions.
  EXPECT_NEAR(dist.conditional_variance(c), 0.75, 1e-14);
  EXPECT_NEAR(dist.conditional_variance({}), 1.0, 1e-14);
}

TEST(Exact, Errors) {
  testing::CountModel model;
  EXPECT_THROW(ExactDistribution(text::Document{}, model, 0.5, 0), InvalidInputError);
  text::TokenList long_doc(21, "w");
  EXPECT_THROW(ExactDistribution(text::Document(long_doc), model, 0.5, 0), ConfigError);
  EXPECT_THROW(ExactDistribution(text::tokenize("a"), model, 1.0, 0), ConfigError);
  ExactDistribution dist(text::tokenize("a b"), model, 0.5, 0);
  const std::size_t bad[] = {2};
  EXPECT_THROW(dist.candidate_drop(bad), InvalidInputError);
}

TEST(AllCandidates, SizeThenLexicographicOrder) {
  const auto c = all_candidates(4, 2);
  ASSERT_EQ(c.size(), 4u + 6u);
  EXPECT_EQ(c[0], (std::vector<std::size_t>{0}));
  EXPECT_EQ(c[3], (std::vector<std::size_t>{3}));
  EXPECT_EQ(c[4], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(c[9], (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(all_candidates(3, 10).size(), 7u);
}

TEST(OracleOptimal, ShortcutPicksRarestWord) {
  ShortcutModel model({"a", "b"});
  ExactDistribution dist(text::tokenize("b b a b"), model, 0.5, 1);
  const auto best = oracle_optimal_candidate(dist, 0.5, 4);
  EXPECT_TRUE(best.feasible);
  EXPECT_EQ(best.positions, (std::vector<std::size_t>{2}));
}

TEST(OracleOptimal, InfeasibleReturnsBestOverall) {
  testing::ConstantModel model({0.5, 0.5});
  ExactDistribution dist(text::tokenize("a b c"), model, 0.5, 1);
  const auto best = oracle_optimal_candidate(dist, 0.5, 2);
  EXPECT_FALSE(best.feasible);
  EXPECT_EQ(best.positions, (std::vector<std::size_t>{0}));
}

TEST(WordCounts, CountsByWord) {
  const text::TokenList t{"a", "b", "a", "c"};
  const std::size_t pos[] = {0, 2, 3};
  EXPECT_EQ(word_counts(t, pos), (std::map<std::string, std::size_t>{{"a", 2}, {"c", 1}}));
}

TEST(ShortcutAllocation, ConcentratesOnRarestWord) {
  const std::size_t m[] = {2, 3, 5};
  EXPECT_EQ(best_shortcut_allocation(m, 1, 0.5), (std::vector<std::size_t>{1, 0, 0}));
  EXPECT_EQ(best_shortcut_allocation(m, 2, 0.5), (std::vector<std::size_t>{2, 0, 0}));
  EXPECT_EQ(best_shortcut_allocation(m, 3, 0.5), (std::vector<std::size_t>{2, 1, 0}));
}

}  // namespace
}  // namespace fred::oracle
