#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fred/predictor.hpp"
#include "fred/text.hpp"

namespace fred::oracle {

// How a perturbed position is realized when enumerating patterns.
enum class Removal { kMask, kDelete };

inline constexpr std::size_t kMaxPositions = 20;

// Compensated (Neumaier) running sum.
class NeumaierSum {
 public:
  void add(double x);
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// All 2^b perturbation patterns of a document, each with probability
// p^{#perturbed} (1-p)^{#kept} and the model's target score. Bit i of a
// pattern index is set when position i is perturbed.
class ExactDistribution {
 public:
  // Throws ConfigError when b > kMaxPositions and InvalidInputError when b = 0.
  ExactDistribution(const text::Document& xi, const predictor::Predictor& model,
                    double p_perturb, std::size_t target_class,
                    Removal removal = Removal::kMask, std::string mask_token = "UNK");

  std::size_t position_count() const noexcept { return positions_; }
  double p_perturb() const noexcept { return p_; }
  double total_probability() const;
  // E[f(x)].
  double expected_prediction() const noexcept { return mean_; }
  // P(every position of c perturbed) = p^|c|.
  double exclusion_probability(std::span<const std::size_t> positions) const;
  // E[f(x) 1{c excluded}].
  double excluded_mass(std::span<const std::size_t> positions) const;
  // E[f(x)] - E[f(x) | c excluded]; the limit of the empirical drop.
  double candidate_drop(std::span<const std::size_t> positions) const;
  // Var(f(x) | c excluded); an empty span gives the unconditional variance.
  double conditional_variance(std::span<const std::size_t> positions) const;

  double probability(std::size_t pattern) const { return probability_[pattern]; }
  double prediction(std::size_t pattern) const { return prediction_[pattern]; }

 private:
  std::size_t positions_ = 0;
  double p_ = 0.5;
  double mean_ = 0.0;
  std::vector<double> probability_;
  std::vector<double> prediction_;
};

double exact_candidate_drop(const predictor::Predictor& model, const text::Document& xi,
                            std::span<const std::size_t> positions, double p_perturb,
                            std::size_t target_class);

// q_keep * sum_j (lambda_j idf_j) c_j.
double linear_drop_closed_form(std::span<const double> weighted_idf,
                               std::span<const std::size_t> counts, double q_keep);

// prod_j (1 - p^{m_j}) - prod_j (1 - p^{m_j - c_j}), with p the probability
// that a token is perturbed.
double shortcut_drop_closed_form(std::span<const std::size_t> multiplicities,
                                 std::span<const std::size_t> counts, double p_perturb);

struct OracleCandidate {
  std::vector<std::size_t> positions;
  double drop = 0.0;
  bool feasible = false;
};

// Exhaustive minimal-size search over exact drops, sizes 1..l_max, with the
// explainer's tie-breaking (drops within `tie_tolerance` count as equal).
OracleCandidate oracle_optimal_candidate(const ExactDistribution& dist, double epsilon,
                                         int l_max, double tie_tolerance = 1e-12);

// Every candidate of size <= l_max, smallest size first and lexicographic
// within a size.
std::vector<std::vector<std::size_t>> all_candidates(std::size_t b, std::size_t l_max);

// Occurrences of each token among `positions`.
std::map<std::string, std::size_t> word_counts(const text::TokenList& tokens,
                                               std::span<const std::size_t> positions);

// Integer allocation c (sum c_j = removals, c_j <= m_j) maximizing the
// shortcut drop; the lexicographically largest allocation wins ties.
std::vector<std::size_t> best_shortcut_allocation(std::span<const std::size_t> multiplicities,
                                                  std::size_t removals, double p_perturb);

}  // namespace fred::oracle
