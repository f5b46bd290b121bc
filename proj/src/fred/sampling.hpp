#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fred/text.hpp"

namespace fred::sampling {

using text::Document;
using text::TokenList;

enum class Scheme { kMask, kPos };

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct SamplingConfig {
  Scheme scheme = Scheme::kMask;
  // Probability that each token is perturbed.
  double p_perturb = 0.5;
  double alpha = 0.95;
  int l_max = 10;
  std::optional<std::size_t> n_override;
  std::uint64_t seed = 0;
  std::string mask_token = "UNK";

  // Validates the ranges and clamps p_perturb to [0.01, 0.99]. Throws
  // ConfigError on alpha outside (0, 1), l_max < 1 or an empty mask token.
  SamplingConfig normalized() const;
  // n_override when set, otherwise required_sample_size(alpha, p_perturb, l_max).
  std::size_t sample_count() const;
};

struct PerturbationSample {
  TokenList tokens;
  // mask[i] is true when position i was perturbed.
  std::vector<bool> mask;
  double prediction = 0.0;
  double drop = 0.0;

  std::size_t perturbed_count() const;
};

// Smallest n such that every candidate of size <= l_max is fully perturbed in
// at least one of n samples with probability >= alpha:
//   n = max(1, ceil(ln(1 - alpha) / ln(1 - p^l_max))).
std::size_t required_sample_size(double alpha, double p_perturb, int l_max);

// Each position independently replaced by cfg.mask_token with probability
// cfg.p_perturb. Throws InvalidInputError on an empty document.
std::vector<PerturbationSample> mask_sample(const Document& xi, const SamplingConfig& cfg,
                                            std::size_t n);

enum class Sentiment { kPositive, kNegative, kNeutral };

// Token -> (part-of-speech tag, sentiment), with per-tag replacement pools.
// Unknown tokens are treated as tag OTHER with neutral sentiment.
class PosLexicon {
 public:
  struct Entry {
    std::string tag;
    Sentiment sentiment = Sentiment::kNeutral;
  };

  static constexpr std::string_view kOtherTag = "OTHER";

  PosLexicon() = default;

  // UTF-8 TSV: token<TAB>pos<TAB>sentiment with sentiment in {pos, neg, neu}.
  // Later lines override earlier ones for the same token.
  static PosLexicon load(const std::string& path);
  static PosLexicon parse(std::istream& in, const std::string& source = "<lexicon>");

  void add(std::string_view token, std::string tag, Sentiment sentiment);

  std::optional<Entry> lookup(std::string_view token) const;
  std::size_t size() const noexcept { return entries_.size(); }

  // Candidates to replace `token`: same tag, opposite sentiment, neutral words
  // on both sides. Neutral tokens draw from every word of their tag; unknown
  // tokens draw from the neutral vocabulary.
  const std::vector<std::string>& replacement_pool(std::string_view token) const;

 private:
  struct TagPools {
    std::vector<std::string> for_positive;  // D-: negative + neutral
    std::vector<std::string> for_negative;  // D+: positive + neutral
    std::vector<std::string> for_neutral;   // every word of the tag
  };
  void rebuild() const;

  std::map<std::string, Entry, std::less<>> entries_;
  mutable bool dirty_ = true;
  mutable std::map<std::string, TagPools, std::less<>> pools_;
  mutable std::vector<std::string> neutral_vocabulary_;
};

// Each position independently selected with probability cfg.p_perturb and
// replaced by a uniform draw from its replacement pool. The original token is
// excluded whenever the pool holds at least two words; an empty pool falls
// back to cfg.mask_token.
std::vector<PerturbationSample> pos_sample(const Document& xi, const SamplingConfig& cfg,
                                           const PosLexicon& lexicon, std::size_t n);

}  // namespace fred::sampling
