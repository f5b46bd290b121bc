// Acceptance suite: one pass/fail line per criterion.
//
//   fred_acceptance                      run every criterion
//   fred_acceptance --criterion NAME     run one
//   fred_acceptance --list

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fred/eval.hpp"
#include "fred/explainer.hpp"
#include "fred/predictor.hpp"
#include "fred/sampling.hpp"
#include "fred/verify.hpp"

namespace {

using fred::text::TokenList;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Outcome from_check(const fred::verify::CheckResult& r) { return {r.passed, r.detail}; }

class ConstantModel final : public fred::predictor::Predictor {
 public:
  explicit ConstantModel(double p) : p_(p) {}
  std::vector<fred::predictor::Prediction> predict_batch(
      std::span<const TokenList> docs) const override {
    return std::vector<fred::predictor::Prediction>(docs.size(), {{1.0 - p_, p_}, false});
  }
  bool is_regression() const override { return false; }
  std::string describe() const override { return "constant"; }

 private:
  double p_;
};

Outcome sample_size() {
  const std::size_t expected = 3064;
  constexpr int kCalls = 1000;
  std::size_t n = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < kCalls; ++i) n = fred::sampling::required_sample_size(0.95, 0.5, 10);
  const double per_call =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / kCalls;
  const bool fast = per_call < 1e-3;
  return {n == expected && fast, "required_sample_size(0.95, 0.5, 10) = " + std::to_string(n) +
                                     ", expected " + std::to_string(expected) + "; " +
                                     fmt(per_call * 1e6, 3) + " us per call"};
}

Outcome estimator_convergence() {
  fred::verify::EstimatorOptions o;
  o.instances = 20;
  o.max_positions = 10;
  o.max_candidate_size = 3;
  o.samples = 20000;
  o.repeats = 1;
  o.tolerance = 0.02;
  return from_check(fred::verify::check_estimator_consistency(o));
}

Outcome sample_coverage() {
  fred::verify::CoverageOptions o;
  o.trials = 1000;
  o.l_max = 3;
  o.p_perturb = 0.5;
  o.alpha = 0.95;
  return from_check(fred::verify::check_sample_coverage(o));
}

Outcome linear_subsets() {
  fred::verify::LinearOptions o;
  o.instances = 50;
  o.max_positions = 12;
  return from_check(fred::verify::check_linear_models(o));
}

Outcome shortcut_subsets() {
  fred::verify::ShortcutOptions o;
  o.instances = 50;
  return from_check(fred::verify::check_shortcut_models(o));
}

Outcome cross_oracle() {
  fred::verify::CrossOracleOptions o;
  o.instances = 100;
  o.max_positions = 10;
  o.tolerance = 1e-12;
  return from_check(fred::verify::check_cross_oracle(o));
}

Outcome metric_arithmetic() {
  using namespace fred::eval;
  using Scores = std::vector<std::optional<double>>;
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  const fred::predictor::ShortcutModel has_a({"a"});
  const ConstantModel half(0.5);
  const TokenList ab{"a", "b"}, abc{"a", "b", "c"};
  const std::vector<std::size_t> e_a{0}, none{}, all_ab{0, 1};

  expect(comprehensiveness(has_a, ab, e_a, 1) == 1.0, "comprehensiveness(1{a}, a b, {a}) = 1");
  expect(comprehensiveness(has_a, ab, none, 1) == 0.0, "comprehensiveness(e = {}) = 0");
  expect(comprehensiveness(half, abc, e_a, 1) == 0.0, "comprehensiveness(constant) = 0");
  expect(sufficiency(has_a, ab, e_a, 1) == 0.0, "sufficiency(1{a}, a b, {a}) = 0");
  expect(sufficiency(has_a, ab, all_ab, 1) == 0.0, "sufficiency(e = all) = 0");
  expect(sufficiency(has_a, ab, none, 1) == 1.0, "sufficiency(1{a}, e = {}) = 1");

  const auto auc_a = auc_morf(has_a, abc, Scores{0.9, 0.5, -0.1}, 1);
  expect(auc_a && *auc_a == 0.0, "aucmorf(1{a}, a b c, a first, D=2) = 0");
  const auto auc_half = auc_morf(half, TokenList{"a", "b", "c", "d"}, Scores{0.3, 0.2, 0.1, -1.0}, 1);
  expect(auc_half && *auc_half == 1.0 / 3.0, "aucmorf(constant 0.5, D=3) = 1/3");
  expect(!auc_morf(half, abc, Scores{-0.1, -0.2, -0.3}, 1), "aucmorf(all negative) undefined");

  const std::vector<std::size_t> e12{1, 2}, e13{1, 3}, e45{4, 5};
  const std::vector<std::vector<std::size_t>> same{e12, e12, e12}, disjoint{e45, e45};
  expect(robustness(e12, same) == 1.0, "robustness(identical runs) = 1");
  expect(robustness(e12, disjoint) == 0.0, "robustness(disjoint runs) = 0");
  expect(jaccard(e12, e13) == 1.0 / 3.0, "J({1,2}, {1,3}) = 1/3");
  expect(jaccard(e12, e12) == 1.0, "J(identical) = 1");
  expect(jaccard(e12, e45) == 0.0, "J(disjoint) = 0");
  expect(jaccard(none, none) == 1.0, "J(empty, empty) = 1");
  auto fixed_run = [](std::uint64_t) { return std::vector<std::size_t>{0, 2}; };
  expect(robustness(fixed_run, 3, 10) == 1.0, "robustness(seed-independent run) = 1");

  expect(proportion(10, 1) == 0.1, "proportion(b=10, |e|=1) = 0.1");
  expect(proportion(7, 7) == 1.0, "proportion(e = all) = 1");
  expect(proportion(6, 2) == 2.0 / 6.0, "proportion(b=6, |e|=2) = 1/3");

  if (failures.empty()) return {true, "22 hand-derived values match"};
  std::string detail = std::to_string(failures.size()) + " mismatch(es): " + failures.front();
  return {false, detail};
}

Outcome determinism() {
  const auto linear = fred::predictor::load_model_file(FRED_DATA_DIR "/models/sentiment_linear.json");
  const auto shortcut = fred::predictor::load_model_file(FRED_DATA_DIR "/models/shortcut_ab.json");
  const auto lexicon = fred::sampling::PosLexicon::load(FRED_DATA_DIR "/lexicon.tsv");
  struct Case {
    const fred::predictor::Predictor* model;
    std::string text;
    fred::sampling::Scheme scheme;
  };
  const std::vector<Case> cases{
      {linear.get(), "Poor drinks, decent food, great service", fred::sampling::Scheme::kMask},
      {linear.get(), "The soup was cold and the bread was stale.", fred::sampling::Scheme::kPos},
      {shortcut.get(), "b a b b c a d", fred::sampling::Scheme::kMask},
  };
  for (const auto& c : cases) {
    fred::explainer::ExplainConfig cfg;
    cfg.sampling.scheme = c.scheme;
    cfg.sampling.seed = 42;
    const auto doc = fred::text::tokenize(c.text);
    const auto first = fred::explainer::to_json(
        fred::explainer::explain(doc, *c.model, cfg, &lexicon), false).dump();
    const auto second = fred::explainer::to_json(
        fred::explainer::explain(doc, *c.model, cfg, &lexicon), false).dump();
    if (first != second) return {false, "explanation JSON differs between runs for '" + c.text + "'"};
  }
  return {true, std::to_string(cases.size()) + " configurations byte-identical across runs"};
}

Outcome eval_table() {
  const auto corpus = fred::text::Corpus::load(FRED_DATA_DIR "/reviews.jsonl");
  const std::vector<std::string> models{FRED_DATA_DIR "/models/sentiment_linear.json",
                                        FRED_DATA_DIR "/models/shortcut_reviews.json"};
  const std::vector<std::string> headers{"suffic.", "compreh.", "robust.",
                                         "aucmorf", "time (s)", "proport."};
  std::size_t docs = 0, fred_at_least_random = 0;
  std::string tables;
  for (const auto& path : models) {
    const auto model = fred::predictor::load_model_file(path);
    fred::eval::EvalConfig cfg;
    cfg.max_documents = 20;
    cfg.explain.sampling.seed = 0;
    const auto report = fred::eval::evaluate_corpus(corpus, *model, cfg);
    if (report.document_indices.size() != 20) {
      return {false, path + ": evaluated " + std::to_string(report.document_indices.size()) +
                         " documents, expected 20"};
    }
    const auto table = report.to_table();
    const auto header_line = table.substr(0, table.find('\n'));
    std::size_t at = 0;
    for (const auto& h : headers) {
      const auto found = header_line.find(h, at);
      if (found == std::string::npos) return {false, "table lacks column '" + h + "' in order"};
      at = found + h.size();
    }
    const auto& fred_docs = report.methods.at(0).documents;
    const auto& random_docs = report.methods.at(1).documents;
    for (std::size_t d = 0; d < fred_docs.size(); ++d) {
      ++docs;
      if (*fred_docs[d].comprehensiveness >= *random_docs[d].comprehensiveness) ++fred_at_least_random;
    }
    for (const auto m : fred::eval::kAllMetrics) {
      if (report.methods[0].summary(m).count == 0) {
        return {false, "column '" + fred::eval::metric_header(m) + "' is empty for " + path};
      }
    }
    tables += table;
  }
  const double share = static_cast<double>(fred_at_least_random) / static_cast<double>(docs);
  std::fputs(tables.c_str(), stdout);
  return {share >= 0.9, "FRED comprehensiveness >= random on " + std::to_string(fred_at_least_random) +
                            "/" + std::to_string(docs) + " documents (" + fmt(100 * share, 3) + "%)"};
}

std::vector<Criterion> criteria() {
  return {
      {"sample-size", 1.0, sample_size},
      {"estimator-convergence", 30.0, estimator_convergence},
      {"sample-coverage", 10.0, sample_coverage},
      {"linear-subsets", 60.0, linear_subsets},
      {"shortcut-subsets", 30.0, shortcut_subsets},
      {"cross-oracle", 10.0, cross_oracle},
      {"metric-arithmetic", 10.0, metric_arithmetic},
      {"determinism", 60.0, determinism},
      {"eval-table", 60.0, eval_table},
  };
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : criteria()) std::printf("%s\n", c.name.c_str());
      return 0;
    } else {
      std::fprintf(stderr, "usage: %s [--criterion NAME] [--list]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.passed && s > c.time_limit_s) {
      o.passed = false;
      o.detail += "; took " + fmt(s, 3) + " s, limit " + fmt(c.time_limit_s, 3) + " s";
    }
    std::printf("%s %-22s %8.3fs  %s\n", o.passed ? "PASS" : "FAIL", c.name.c_str(), s,
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
