#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fred/error.hpp"
#include "fred/predictor.hpp"
#include "fred/rng.hpp"
#include "test_models.hpp"

namespace fred::predictor {
namespace {

using text::TokenList;

text::TfIdfVectorizer unit_idf(const std::vector<std::string>& words) {
  std::map<std::string, std::size_t> vocab;
  for (const auto& w : words) vocab.emplace(w, vocab.size());
  return text::TfIdfVectorizer(vocab, std::vector<double>(words.size(), 1.0));
}

TEST(Prediction, ArgmaxAndTarget) {
  Prediction p{{0.2, 0.8}, false};
  EXPECT_EQ(argmax(p), 1u);
  EXPECT_DOUBLE_EQ(target_score(p, 1), 0.8);
  EXPECT_THROW(target_score(p, 2), ConfigError);
  EXPECT_DOUBLE_EQ(target_score(Prediction{{3.7}, true}, 0), 3.7);
}

TEST(Prediction, ArgmaxTiesPickLowestClass) {
  EXPECT_EQ(argmax(Prediction{{0.5, 0.5}, false}), 0u);
}

TEST(ShortcutModel, Indicator) {
  ShortcutModel m({"a", "b"});
  EXPECT_EQ(m.indicator({"a", "b", "b"}), 1.0);
  EXPECT_EQ(m.indicator({"b", "b"}), 0.0);
  const auto p = m.predict({"a", "b"});
  EXPECT_EQ(p.values, (std::vector<double>{0.0, 1.0}));
  EXPECT_FALSE(p.regression);
  EXPECT_THROW(ShortcutModel({}), ConfigError);
}

TEST(ShortcutModel, MaskingEveryOccurrenceFlipsOutput) {
  ShortcutModel m({"a", "b"});
  EXPECT_EQ(m.indicator({"a", "UNK", "b", "c"}), 1.0);
  EXPECT_EQ(m.indicator({"UNK", "UNK", "b", "c"}), 0.0);
  EXPECT_EQ(m.indicator({"a", "b", "UNK", "UNK"}), 1.0);
}

TEST(LinearModel, HandValue) {
  LinearTfIdfModel m(text::TfIdfVectorizer({{"w", 0}}, {0.5}), {{"w", 4.0}}, 0.0);
  EXPECT_DOUBLE_EQ(m.effective_weight("w"), 2.0);
  EXPECT_DOUBLE_EQ(m.predict({"w", "w", "w"}).values[0], 6.0);
  EXPECT_TRUE(m.is_regression());
}

TEST(LinearModel, LogisticLinkGivesTwoClasses) {
  LinearTfIdfModel m(unit_idf({"w"}), {{"w", 1.0}}, -1.0, Link::kLogistic);
  const auto p = m.predict({"w", "w"});
  ASSERT_EQ(p.values.size(), 2u);
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(p.values[1], s, 1e-15);
  EXPECT_NEAR(p.values[0] + p.values[1], 1.0, 1e-15);
  EXPECT_FALSE(m.is_regression());
}

TEST(LinearModel, MaskingOneOccurrenceSubtractsEffectiveWeight) {
  const auto corpus = text::Corpus::from_texts({"a b c d", "a b", "c e", "a"});
  const auto vec = text::TfIdfVectorizer::fit(corpus);
  LinearTfIdfModel m(vec, {{"a", 0.7}, {"b", -1.3}, {"c", 2.1}, {"d", 0.4}, {"e", -0.2}}, 0.3);
  Rng rng(7);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "zz"};
  for (int trial = 0; trial < 200; ++trial) {
    TokenList doc;
    const auto b = 1 + rng.uniform_index(10);
    for (std::size_t i = 0; i < b; ++i) doc.push_back(words[rng.uniform_index(words.size())]);
    const double base = m.predict(doc).values[0];
    const auto i = rng.uniform_index(b);
    auto masked = doc;
    masked[i] = "UNK";
    EXPECT_NEAR(m.predict(masked).values[0] - base, -m.effective_weight(doc[i]), 1e-12);
  }
}

TEST(Memoizing, CallsInnerOncePerDistinctDocument) {
  testing::ConstantModel inner({0.5, 0.5});
  MemoizingPredictor memo(inner);
  std::vector<TokenList> docs{{"a"}, {"b"}, {"a"}, {"a", "b"}};
  const auto first = memo.predict_batch(docs);
  EXPECT_EQ(first.size(), 4u);
  EXPECT_EQ(inner.calls(), 3u);
  memo.predict_batch(docs);
  EXPECT_EQ(inner.calls(), 3u);
  EXPECT_EQ(memo.cache_size(), 3u);
  EXPECT_EQ(memo.inner_calls(), 1u);
}

TEST(Memoizing, KeyKeepsTokenBoundaries) {
  testing::CountModel inner;
  MemoizingPredictor memo(inner);
  EXPECT_EQ(memo.predict({"ab", "c"}).values[0], 2.0);
  EXPECT_EQ(memo.predict({"a", "bc"}).values[0], 2.0);
  EXPECT_EQ(memo.predict({"abc"}).values[0], 1.0);
  EXPECT_EQ(memo.cache_size(), 3u);
}

TEST(ParseModel, Shortcut) {
  auto m = parse_model({{"kind", "shortcut"}, {"tokens", {"A", "b", "a"}}});
  auto* s = dynamic_cast<ShortcutModel*>(m.get());
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->shortcut_tokens(), (std::vector<std::string>{"a", "b"}));
}

TEST(ParseModel, LinearWithoutVectorizerUsesUnitIdf) {
  auto m = parse_model({{"kind", "linear"}, {"coefficients", {{"x", 2.0}}}, {"intercept", 1.0}});
  EXPECT_DOUBLE_EQ(m->predict({"x", "x", "y"}).values[0], 5.0);
}

TEST(ParseModel, LinearWithEmbeddedVectorizer) {
  const auto j = nlohmann::json::parse(R"({
    "kind": "linear", "link": "logistic", "coefficients": {"x": 1.0},
    "vectorizer": {"vocabulary": {"x": 0}, "idf": [2.0]}})");
  auto m = parse_model(j);
  EXPECT_NEAR(m->predict({"x"}).values[1], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(ParseModel, Errors) {
  EXPECT_THROW(parse_model(nlohmann::json::array()), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "tree"}}), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "shortcut"}}), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "shortcut"}, {"tokens", {1}}}), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "linear"}}), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "linear"}, {"coefficients", {{"x", "y"}}}}), ConfigError);
  EXPECT_THROW(parse_model({{"kind", "linear"}, {"coefficients", {{"x", 1}}}, {"link", "probit"}}),
               ConfigError);
}

TEST(LoadModel, MissingFileIsConfigError) {
  EXPECT_THROW(load_model_file("/nonexistent/model.json"), ConfigError);
}

TEST(LoadModel, KindMismatchIsConfigError) {
  const std::string path = ::testing::TempDir() + "shortcut.json";
  {
    std::ofstream out(path);
    out << R"({"kind": "shortcut", "tokens": ["a"]})";
  }
  EXPECT_EQ(model_file_kind(path), PredictorKind::kBuiltinShortcut);
  EXPECT_THROW(make_predictor({PredictorKind::kBuiltinLinear, path, {}, {}, 0}), ConfigError);
  EXPECT_NE(make_predictor({PredictorKind::kBuiltinShortcut, path, {}, {}, 0}), nullptr);
  std::remove(path.c_str());
}

TEST(LoadModel, BundledModels) {
  auto lin = load_model_file(FRED_DATA_DIR "/models/sentiment_linear.json");
  EXPECT_FALSE(lin->is_regression());
  EXPECT_GT(lin->predict(text::tokenize("great food and excellent service").tokens()).values[1], 0.5);
  EXPECT_LT(lin->predict(text::tokenize("rude staff and cold soup").tokens()).values[1], 0.5);
  auto sc = load_model_file(FRED_DATA_DIR "/models/shortcut_ab.json");
  EXPECT_EQ(sc->predict({"a", "b"}).values[1], 1.0);
}

}  // namespace
}  // namespace fred::predictor
