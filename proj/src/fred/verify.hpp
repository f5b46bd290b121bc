#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "fred/text.hpp"

namespace fred::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json stats = nlohmann::json::object();
};

// required_sample_size against a brute-force search for the smallest n with
// 1 - (1 - p^l)^n >= alpha over a parameter grid.
CheckResult check_sample_size();

struct EstimatorOptions {
  std::size_t instances = 20;
  std::size_t max_positions = 10;
  std::size_t max_candidate_size = 3;
  std::size_t samples = 20000;
  // The empirical drop is averaged over this many independent sample sets.
  std::size_t repeats = 10;
  double tolerance = 0.02;
  std::uint64_t seed = 0;
};

// Empirical candidate drops against the exact enumeration limit on random
// linear (identity and logistic link) and shortcut instances.
CheckResult check_estimator_consistency(const EstimatorOptions& options = {});

struct CoverageOptions {
  std::size_t trials = 1000;
  double alpha = 0.95;
  double p_perturb = 0.5;
  int l_max = 3;
  std::uint64_t seed = 0;
};

// Fraction of sample sets of the prescribed size in which a fixed size-l_max
// candidate is never fully perturbed, against 1 - alpha + 3 sigma.
CheckResult check_sample_coverage(const CoverageOptions& options = {});

struct LinearOptions {
  std::size_t instances = 50;
  std::size_t max_positions = 12;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  // idf used to fit the models' vectorizers; the expectations always use the
  // smoothed definition.
  text::IdfFunction idf = text::smooth_idf;
};

// Minimal subsets on linear TF-IDF models: greedy prefix by lambda * idf, no
// negative words, agreement with the exhaustive oracle.
CheckResult check_linear_models(const LinearOptions& options = {});

struct ShortcutOptions {
  std::size_t instances = 50;
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
};

// Minimal subsets on shortcut models with increasing multiplicities:
// min(m_1, l_max) occurrences of the rarest shortcut word, plus the corner
// property of drop-maximizing allocations.
CheckResult check_shortcut_models(const ShortcutOptions& options = {});

struct CrossOracleOptions {
  std::size_t instances = 100;
  std::size_t max_positions = 10;
  double tolerance = 1e-12;
  std::uint64_t seed = 0;
};

// Closed-form drops against exhaustive enumeration on every candidate.
CheckResult check_cross_oracle(const CrossOracleOptions& options = {});

// Masking and deleting tokens give identical TF-IDF vectors and oracle values.
CheckResult check_mask_equivalence(std::uint64_t seed = 0, std::size_t instances = 50);

std::vector<std::string> check_names();

// Runs the named checks (all when `names` is empty) with default sizes.
// Throws ConfigError on an unknown name.
std::vector<CheckResult> run_checks(const std::vector<std::string>& names, std::uint64_t seed);

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace fred::verify
