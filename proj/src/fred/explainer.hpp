#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "fred/predictor.hpp"
#include "fred/sampling.hpp"
#include "fred/text.hpp"

namespace fred::explainer {

using sampling::PerturbationSample;
using text::TokenList;

// A set of token positions (0-based, ascending) with the number of samples in
// which all of them were perturbed and the empirical drop over those samples.
struct Candidate {
  std::vector<std::size_t> positions;
  std::size_t n_excluding = 0;
  double drop = 0.0;

  std::size_t size() const noexcept { return positions.size(); }
};

// Fills each sample's drop with mean - f(x_i) and returns the mean. The
// samples' `prediction` fields must already hold f(x_i).
double sample_drops(std::span<PerturbationSample> samples);

// Column-wise bitsets of the perturbation masks, so that the samples excluding
// a candidate are the AND of its positions' columns.
class DropTable {
 public:
  explicit DropTable(std::span<const PerturbationSample> samples);

  std::size_t sample_count() const noexcept { return predictions_.size(); }
  std::size_t position_count() const noexcept { return positions_; }
  double mean_prediction() const noexcept { return mean_; }

  // D_c = mean - (1/n_c) * sum of f over samples excluding c; nullopt when no
  // sample excludes c.
  std::optional<Candidate> evaluate(std::span<const std::size_t> positions) const;

  std::size_t words() const noexcept { return words_; }
  const std::uint64_t* column(std::size_t position) const {
    return bits_.data() + position * words_;
  }
  // Sum of f over the samples set in `mask`, in sample order; writes the count.
  double masked_sum(const std::uint64_t* mask, std::size_t& count) const;

 private:
  std::size_t positions_ = 0;
  std::size_t words_ = 0;
  double mean_ = 0.0;
  std::vector<double> predictions_;
  std::vector<std::uint64_t> bits_;
};

std::optional<double> empirical_drop(const DropTable& table,
                                     std::span<const std::size_t> positions);

// s_i = empirical drop of the singleton {i}; nullopt for positions that were
// never perturbed.
std::vector<std::optional<double>> token_scores(const DropTable& table);

struct SearchConfig {
  double epsilon = 0.15;
  int l_max = 10;
  // Candidates of size >= 2 only draw from the pool_size positions with the
  // highest singleton scores; pool_size >= b searches exhaustively.
  std::size_t pool_size = 20;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 1;
};

struct SearchResult {
  std::optional<Candidate> best;
  bool threshold_met = false;
  double threshold = 0.0;  // epsilon * mean prediction
  std::vector<std::size_t> pool;
  std::uint64_t evaluated = 0;
  std::uint64_t skipped = 0;  // candidates with no excluding sample
};

// Sizes 1..l_max in turn; the best drop seen so far persists across sizes and
// only a strictly larger drop replaces it, so ties go to the smaller, then
// lexicographically smaller, position set. Returns at the first size whose
// best drop reaches epsilon * mean, otherwise the overall best.
SearchResult find_minimal_subset(const DropTable& table,
                                 std::span<const std::optional<double>> scores,
                                 const SearchConfig& config);

struct Counterfactual {
  TokenList tokens;
  std::size_t n_perturbed = 0;
  std::size_t predicted_class = 0;
};

// Up to k distinct samples whose predicted class differs from original_class,
// fewest perturbed positions first (sample order breaks ties).
std::vector<Counterfactual> counterfactuals(std::span<const PerturbationSample> samples,
                                            std::span<const predictor::Prediction> predictions,
                                            std::size_t original_class, std::size_t k);

struct ExplainConfig {
  sampling::SamplingConfig sampling;
  double epsilon = 0.15;
  std::size_t pool_size = 20;
  std::size_t n_counterfactuals = 3;
  // Defaults to the argmax class of the unperturbed document.
  std::optional<std::size_t> target_class;
  unsigned threads = 0;
};

struct Explanation {
  TokenList tokens;
  std::optional<Candidate> minimal_subset;
  bool threshold_met = false;
  double threshold = 0.0;
  std::vector<std::optional<double>> token_scores;
  std::vector<Counterfactual> counterfactuals;
  bool counterfactuals_available = true;
  double mean_prediction = 0.0;
  double original_prediction = 0.0;
  std::size_t original_class = 0;
  std::size_t target_class = 0;
  std::size_t sample_count = 0;
  ExplainConfig config;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;

  std::vector<std::size_t> subset_positions() const {
    return minimal_subset ? minimal_subset->positions : std::vector<std::size_t>{};
  }
};

// Full pipeline: sample, score with one batched prediction call, search the
// minimal subset, score tokens and collect counterfactuals. Throws
// InvalidInputError on an empty document and ConfigError on bad settings
// (pos sampling without a lexicon, a mask token the model recognizes, ...).
Explanation explain(const text::Document& xi, const predictor::Predictor& model,
                    const ExplainConfig& config,
                    const sampling::PosLexicon* lexicon = nullptr);

nlohmann::json config_to_json(const ExplainConfig& config, std::size_t sample_count);

// Explanation JSON; wall_time_s is null when include_timing is false.
nlohmann::json to_json(const Explanation& e, bool include_timing = true);

}  // namespace fred::explainer
