#include <gtest/gtest.h>

#include "fred/error.hpp"
#include "fred/explainer.hpp"
#include "fred/render.hpp"
#include "fred/schema.hpp"

namespace fred {
namespace {

explainer::Explanation shortcut_explanation(const std::string& text) {
  predictor::ShortcutModel model({"a", "b"});
  explainer::ExplainConfig cfg;
  cfg.sampling.l_max = 3;
  cfg.threads = 1;
  return explainer::explain(text::tokenize(text), model, cfg);
}

TEST(Color, EndpointsAndWhite) {
  const auto green = render::score_color(2.0, 2.0);
  EXPECT_EQ(green.r, 26);
  EXPECT_EQ(green.g, 150);
  EXPECT_EQ(green.b, 65);
  const auto red = render::score_color(-2.0, 2.0);
  EXPECT_EQ(red.r, 215);
  EXPECT_EQ(red.g, 48);
  EXPECT_EQ(red.b, 39);
  const auto white = render::score_color(0.0, 2.0);
  EXPECT_EQ(white.r + white.g + white.b, 3 * 255);
  const auto none = render::score_color(1.0, 0.0);
  EXPECT_EQ(none.r, 255);
  const auto half = render::score_color(1.0, 2.0);
  EXPECT_EQ(half.g, 203);
}

TEST(Html, EscapesMarkup) {
  EXPECT_EQ(render::html_escape("<a href=\"x\">&'"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;");
}

TEST(Html, SelfContainedPage) {
  auto e = shortcut_explanation("a b c");
  e.tokens[2] = "<b>";
  const auto page = render::html(e);
  EXPECT_EQ(page.rfind("<!DOCTYPE html>", 0), 0u);
  EXPECT_NE(page.find("</html>"), std::string::npos);
  EXPECT_EQ(page.find("<script"), std::string::npos);
  EXPECT_EQ(page.find("http://"), std::string::npos);
  EXPECT_EQ(page.find("https://"), std::string::npos);
  EXPECT_EQ(page.find("<link"), std::string::npos);
  EXPECT_NE(page.find("&lt;"), std::string::npos);
}

TEST(Ansi, ShowsSubsetAndScores) {
  const auto e = shortcut_explanation("a b b");
  const auto out = render::ansi(e);
  EXPECT_NE(out.find("\x1b[48;2;"), std::string::npos);
  EXPECT_NE(out.find("minimal subset: [a]"), std::string::npos);
  EXPECT_DOUBLE_EQ(render::max_abs_score(e), *e.token_scores[0]);
}

nlohmann::json explanation_schema() {
  return schema::load_schema(FRED_SCHEMA_DIR "/explanation.schema.json");
}

TEST(Schema, ExplanationJsonValidates) {
  const auto s = explanation_schema();
  const auto e = shortcut_explanation("a b b c");
  EXPECT_EQ(schema::validate(explainer::to_json(e, true), s), std::vector<std::string>{});
  EXPECT_EQ(schema::validate(explainer::to_json(e, false), s), std::vector<std::string>{});
}

TEST(Schema, ReportsViolationsWithPointers) {
  const auto s = explanation_schema();
  auto j = explainer::to_json(shortcut_explanation("a b"), false);
  j["extra"] = 1;
  j["tokens"] = nlohmann::json::array();
  j["config"]["sampling"] = "shuffle";
  j["minimal_subset"].erase("drop");
  const auto errors = schema::validate(j, s);
  auto has = [&](const std::string& prefix) {
    return std::any_of(errors.begin(), errors.end(),
                       [&](const auto& e) { return e.rfind(prefix, 0) == 0; });
  };
  EXPECT_TRUE(has("/extra") || has("/:"));
  EXPECT_TRUE(has("/tokens"));
  EXPECT_TRUE(has("/config/sampling"));
  EXPECT_TRUE(has("/minimal_subset"));
}

TEST(Schema, Keywords) {
  const nlohmann::json s = {{"type", "array"},
                            {"maxItems", 2},
                            {"items", {{"type", "integer"}, {"minimum", 0}, {"maximum", 3}}}};
  EXPECT_TRUE(schema::validate(nlohmann::json{0, 3}, s).empty());
  EXPECT_TRUE(schema::validate(nlohmann::json{2.0}, s).empty());
  EXPECT_EQ(schema::validate(nlohmann::json{-1}, s).size(), 1u);
  EXPECT_EQ(schema::validate(nlohmann::json{4}, s).size(), 1u);
  EXPECT_EQ(schema::validate(nlohmann::json{1, 2, 3}, s).size(), 1u);
  EXPECT_EQ(schema::validate(nlohmann::json{1.5}, s).size(), 1u);
  EXPECT_EQ(schema::validate("x", s).size(), 1u);
  EXPECT_THROW(schema::load_schema("/nonexistent.json"), ConfigError);
}

}  // namespace
}  // namespace fred
