#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "fred/explainer.hpp"
#include "fred/predictor.hpp"
#include "fred/sampling.hpp"
#include "fred/text.hpp"

namespace fred::eval {

using text::TokenList;

// Copy of `tokens` with the positions in `removed` replaced by the mask token.
TokenList mask_positions(const TokenList& tokens, std::span<const std::size_t> removed,
                         const std::string& mask_token);
// Copy of `tokens` keeping only `kept`; every other position is masked.
TokenList keep_positions(const TokenList& tokens, std::span<const std::size_t> kept,
                         const std::string& mask_token);

// f(xi) - f(xi without e).
double comprehensiveness(const predictor::Predictor& model, const TokenList& xi,
                         std::span<const std::size_t> e, std::size_t target_class,
                         const std::string& mask_token = "UNK");

// f(xi) - f(e alone).
double sufficiency(const predictor::Predictor& model, const TokenList& xi,
                   std::span<const std::size_t> e, std::size_t target_class,
                   const std::string& mask_token = "UNK");

// Positions with a defined positive score, highest first; position breaks ties.
std::vector<std::size_t> positive_ranking(std::span<const std::optional<double>> scores);

// The k highest-scoring positions (any sign), highest first, position breaking
// ties; positions without a score come last.
std::vector<std::size_t> top_k(std::span<const std::optional<double>> scores, std::size_t k);

// (1/D) sum_{k=2..D} (f(y_{k-1}) + f(y_k)) / 2 with y_k = xi minus its k
// highest positive-score tokens and D = min(max_depth, |e+|). nullopt when
// fewer than two tokens have a positive score.
std::optional<double> auc_morf(const predictor::Predictor& model, const TokenList& xi,
                               std::span<const std::optional<double>> scores,
                               std::size_t target_class, const std::string& mask_token = "UNK",
                               std::size_t max_depth = 20);

// |a & b| / |a | b|; 1 when both are empty.
double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Runs `explain` with `seed` for the reference explanation, then k more times
// with seeds derived from it, and averages the Jaccard similarity to the
// reference.
using SubsetRun = std::function<std::vector<std::size_t>(std::uint64_t seed)>;
double robustness(const SubsetRun& explain, std::uint64_t seed, std::size_t k);
double robustness(std::span<const std::size_t> reference,
                  std::span<const std::vector<std::size_t>> others);

// |e| / b.
double proportion(std::size_t b, std::size_t subset_size);

enum class Metric { kSufficiency, kComprehensiveness, kRobustness, kAucMorf, kTime, kProportion };

// Column order of the report table.
inline constexpr Metric kAllMetrics[] = {Metric::kSufficiency, Metric::kComprehensiveness,
                                         Metric::kRobustness,  Metric::kAucMorf,
                                         Metric::kTime,        Metric::kProportion};

std::string metric_key(Metric m);     // "sufficiency", ...
std::string metric_header(Metric m);  // "suffic.", ...
Metric parse_metric(std::string_view name);
// Comma-separated metric names; empty selects all.
std::vector<Metric> parse_metric_list(std::string_view list);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Order-insensitive accumulator (count, sum, sum of squares).
class SummaryBuilder {
 public:
  void add(double x);
  void merge(const SummaryBuilder& other);
  Summary summary() const;

 private:
  std::size_t count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

struct DocumentMetrics {
  std::size_t document_index = 0;
  std::size_t length = 0;
  std::vector<std::size_t> subset;
  std::optional<double> sufficiency;
  std::optional<double> comprehensiveness;
  std::optional<double> robustness;
  std::optional<double> auc_morf;
  std::optional<double> time_s;
  std::optional<double> proportion;

  std::optional<double> value(Metric m) const;
};

struct MethodReport {
  std::string name;
  std::vector<DocumentMetrics> documents;

  Summary summary(Metric m) const;
};

// Score vectors from another explainer, keyed by corpus document index.
struct ExternalScores {
  std::string method;
  std::map<std::size_t, std::vector<std::optional<double>>> scores;
};

// JSON lines {"method": name, "index": i, "scores": [...]}; one method per
// distinct name, in order of first appearance.
std::vector<ExternalScores> load_external_scores(const std::string& path);

struct EvalConfig {
  explainer::ExplainConfig explain;
  std::size_t max_documents = 100;
  // Keep only documents whose predicted class is this one.
  std::optional<std::size_t> predicted_class;
  // Keep only documents with this label.
  std::optional<std::string> label;
  // Shortest documents first; otherwise corpus order.
  bool order_by_length = true;
  std::size_t robustness_runs = 10;
  std::vector<Metric> metrics{std::begin(kAllMetrics), std::end(kAllMetrics)};
  bool random_baseline = true;
  std::vector<ExternalScores> external;
  // Documents evaluated concurrently; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct EvalReport {
  std::vector<std::size_t> document_indices;
  std::vector<Metric> metrics;
  std::vector<MethodReport> methods;

  nlohmann::json to_json() const;
  // Aligned text table: one row per method, "mean ± std" per metric column.
  std::string to_table() const;
};

// Indices of the corpus documents the selector keeps, in evaluation order.
std::vector<std::size_t> select_documents(const text::Corpus& corpus,
                                          const predictor::Predictor& model,
                                          const EvalConfig& config);

// Explains every selected document with FRED and scores the random baseline
// and any external score vectors with top-k subsets, k = |FRED subset|.
EvalReport evaluate_corpus(const text::Corpus& corpus, const predictor::Predictor& model,
                           const EvalConfig& config,
                           const sampling::PosLexicon* lexicon = nullptr);

}  // namespace fred::eval
