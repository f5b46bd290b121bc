#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fred/error.hpp"
#include "fred/sampling.hpp"

namespace fred::sampling {
namespace {

// Smallest n with 1 - (1 - p^l)^n >= alpha, by direct search.
std::size_t brute_force_n(double alpha, double p, int l) {
  const double q = std::pow(p, l);
  double miss = 1.0;
  for (std::size_t n = 1;; ++n) {
    miss *= 1.0 - q;
    if (1.0 - miss >= alpha) return n;
  }
}

TEST(SampleSize, MatchesDirectSearch) {
  for (double alpha : {0.5, 0.9, 0.95, 0.99}) {
    for (double p : {0.3, 0.5, 0.7}) {
      for (int l : {1, 2, 3, 5, 8}) {
        EXPECT_EQ(required_sample_size(alpha, p, l), brute_force_n(alpha, p, l))
            << alpha << " " << p << " " << l;
      }
    }
  }
}

TEST(SampleSize, HandValues) {
  EXPECT_EQ(required_sample_size(0.95, 0.5, 1), 5u);
  EXPECT_EQ(required_sample_size(1e-9, 0.5, 10), 1u);
  EXPECT_EQ(required_sample_size(0.0, 0.3, 4), 1u);
}

TEST(SampleSize, Errors) {
  EXPECT_THROW(required_sample_size(1.0, 0.5, 3), ConfigError);
  EXPECT_THROW(required_sample_size(0.95, 0.0, 3), ConfigError);
  EXPECT_THROW(required_sample_size(0.95, 0.5, 0), ConfigError);
  EXPECT_THROW(required_sample_size(0.95, 0.01, 200), ConfigError);
}

TEST(Config, NormalizedClampsAndValidates) {
  SamplingConfig cfg;
  cfg.p_perturb = 0.0;
  EXPECT_DOUBLE_EQ(cfg.normalized().p_perturb, 0.01);
  cfg.p_perturb = 1.0;
  EXPECT_DOUBLE_EQ(cfg.normalized().p_perturb, 0.99);
  cfg.p_perturb = 0.5;
  cfg.alpha = 1.0;
  EXPECT_THROW(cfg.normalized(), ConfigError);
  cfg.alpha = 0.95;
  cfg.l_max = 0;
  EXPECT_THROW(cfg.normalized(), ConfigError);
  cfg.l_max = 3;
  cfg.mask_token.clear();
  EXPECT_THROW(cfg.normalized(), ConfigError);
  cfg.mask_token = "UNK";
  cfg.n_override = 0;
  EXPECT_THROW(cfg.normalized(), ConfigError);
  cfg.n_override = 17;
  EXPECT_EQ(cfg.normalized().sample_count(), 17u);
}

TEST(Scheme, Names) {
  EXPECT_EQ(parse_scheme("mask"), Scheme::kMask);
  EXPECT_EQ(parse_scheme("pos"), Scheme::kPos);
  EXPECT_EQ(scheme_name(Scheme::kPos), "pos");
  EXPECT_THROW(parse_scheme("shuffle"), ConfigError);
}

TEST(MaskSample, MaskedPositionsHoldTheMaskToken) {
  const auto xi = text::tokenize("poor drinks decent food great service");
  SamplingConfig cfg;
  cfg.seed = 3;
  const auto samples = mask_sample(xi, cfg, 500);
  ASSERT_EQ(samples.size(), 500u);
  for (const auto& s : samples) {
    ASSERT_EQ(s.tokens.size(), xi.size());
    ASSERT_EQ(s.mask.size(), xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      EXPECT_EQ(s.tokens[i], s.mask[i] ? "UNK" : xi[i]);
    }
  }
}

TEST(MaskSample, PerturbationRateNearP) {
  const auto xi = text::tokenize("a b c d e f g h i j");
  SamplingConfig cfg;
  cfg.p_perturb = 0.3;
  cfg.seed = 11;
  const std::size_t n = 20000;
  std::size_t perturbed = 0;
  for (const auto& s : mask_sample(xi, cfg, n)) perturbed += s.perturbed_count();
  const double rate = static_cast<double>(perturbed) / (n * xi.size());
  const double se = std::sqrt(0.3 * 0.7 / (n * xi.size()));
  EXPECT_NEAR(rate, 0.3, 4 * se);
}

TEST(MaskSample, SeedDeterminism) {
  const auto xi = text::tokenize("one two three four");
  SamplingConfig cfg;
  cfg.seed = 99;
  const auto a = mask_sample(xi, cfg, 200);
  const auto b = mask_sample(xi, cfg, 200);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].tokens, b[k].tokens);
    EXPECT_EQ(a[k].mask, b[k].mask);
  }
  cfg.seed = 100;
  const auto c = mask_sample(xi, cfg, 200);
  std::size_t differ = 0;
  for (std::size_t k = 0; k < a.size(); ++k) differ += a[k].mask != c[k].mask;
  EXPECT_GT(differ, 0u);
}

TEST(MaskSample, SmallestProbabilityAlmostNeverPerturbs) {
  const auto xi = text::tokenize("a b c");
  SamplingConfig cfg;
  cfg.p_perturb = 0.0;
  const auto norm = cfg.normalized();
  std::size_t perturbed = 0;
  for (const auto& s : mask_sample(xi, norm, 1000)) perturbed += s.perturbed_count();
  EXPECT_LT(perturbed, 80u);
}

TEST(MaskSample, EmptyDocumentIsInvalidInput) {
  EXPECT_THROW(mask_sample(text::Document{}, SamplingConfig{}, 5), InvalidInputError);
}

PosLexicon small_lexicon() {
  std::istringstream in(
      "# comment\n"
      "good\tADJ\tpos\n"
      "great\tADJ\tpositive\n"
      "bad\tADJ\tneg\n"
      "awful\tADJ\tneg\n"
      "plain\tADJ\tneu\n"
      "food\tNOUN\tneu\n"
      "soup\tNOUN\tneu\n"
      "the\tOTHER\tneu\n");
  return PosLexicon::parse(in);
}

TEST(Lexicon, Parse) {
  const auto lex = small_lexicon();
  EXPECT_EQ(lex.size(), 8u);
  ASSERT_TRUE(lex.lookup("great").has_value());
  EXPECT_EQ(lex.lookup("great")->tag, "ADJ");
  EXPECT_EQ(lex.lookup("great")->sentiment, Sentiment::kPositive);
  EXPECT_FALSE(lex.lookup("pizza").has_value());
}

TEST(Lexicon, ParseErrors) {
  std::istringstream two_cols("good\tADJ\n");
  EXPECT_THROW(PosLexicon::parse(two_cols), ConfigError);
  std::istringstream bad_sentiment("good\tADJ\thappy\n");
  EXPECT_THROW(PosLexicon::parse(bad_sentiment), ConfigError);
  EXPECT_THROW(PosLexicon::load("/nonexistent/lexicon.tsv"), ConfigError);
}

TEST(Lexicon, PoolsFlipSentimentWithinTag) {
  const auto lex = small_lexicon();
  EXPECT_EQ(lex.replacement_pool("good"), (std::vector<std::string>{"awful", "bad", "plain"}));
  EXPECT_EQ(lex.replacement_pool("bad"), (std::vector<std::string>{"good", "great", "plain"}));
  EXPECT_EQ(lex.replacement_pool("plain"),
            (std::vector<std::string>{"awful", "bad", "good", "great", "plain"}));
  EXPECT_EQ(lex.replacement_pool("food"), (std::vector<std::string>{"food", "soup"}));
}

TEST(Lexicon, UnknownWordsUseNeutralVocabulary) {
  const auto lex = small_lexicon();
  EXPECT_EQ(lex.replacement_pool("pizza"),
            (std::vector<std::string>{"food", "plain", "soup", "the"}));
}

TEST(PosSample, ReplacementsComeFromPoolAndDifferFromOriginal) {
  const auto lex = small_lexicon();
  const auto xi = text::tokenize("the good food");
  SamplingConfig cfg;
  cfg.scheme = Scheme::kPos;
  cfg.seed = 5;
  std::set<std::string> seen_for_good;
  for (const auto& s : pos_sample(xi, cfg, lex, 2000)) {
    for (std::size_t i = 0; i < xi.size(); ++i) {
      if (!s.mask[i]) {
        EXPECT_EQ(s.tokens[i], xi[i]);
        continue;
      }
      const auto& pool = lex.replacement_pool(xi[i]);
      EXPECT_NE(std::find(pool.begin(), pool.end(), s.tokens[i]), pool.end());
      if (pool.size() >= 2 && std::find(pool.begin(), pool.end(), xi[i]) != pool.end()) {
        EXPECT_NE(s.tokens[i], xi[i]);
      }
      if (i == 1) seen_for_good.insert(s.tokens[i]);
    }
  }
  EXPECT_EQ(seen_for_good, (std::set<std::string>{"awful", "bad", "plain"}));
}

TEST(PosSample, EmptyLexiconFallsBackToMask) {
  PosLexicon lex;
  SamplingConfig cfg;
  cfg.seed = 1;
  for (const auto& s : pos_sample(text::tokenize("x y"), cfg, lex, 50)) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (s.mask[i]) EXPECT_EQ(s.tokens[i], "UNK");
    }
  }
}

}  // namespace
}  // namespace fred::sampling
