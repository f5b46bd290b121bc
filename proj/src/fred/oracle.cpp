#include "fred/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fred/error.hpp"

namespace fred::oracle {

void NeumaierSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

namespace {

std::size_t to_bits(std::span<const std::size_t> positions, std::size_t b) {
  std::size_t bits = 0;
  for (auto p : positions) {
    if (p >= b) throw InvalidInputError("candidate position out of range");
    bits |= std::size_t{1} << p;
  }
  return bits;
}

}  // namespace

ExactDistribution::ExactDistribution(const text::Document& xi,
                                     const predictor::Predictor& model, double p_perturb,
                                     std::size_t target_class, Removal removal,
                                     std::string mask_token)
    : positions_(xi.size()), p_(p_perturb) {
  if (positions_ == 0) throw InvalidInputError("cannot enumerate an empty document");
  if (positions_ > kMaxPositions) {
    throw ConfigError("exact enumeration is limited to " + std::to_string(kMaxPositions) +
                      " positions, document has " + std::to_string(positions_));
  }
  if (!(p_perturb > 0.0 && p_perturb < 1.0)) throw ConfigError("p_perturb must lie in (0, 1)");

  const std::size_t patterns = std::size_t{1} << positions_;
  probability_.resize(patterns);
  prediction_.resize(patterns);
  for (std::size_t s = 0; s < patterns; ++s) {
    const int k = std::popcount(s);
    probability_[s] = std::pow(p_, k) * std::pow(1.0 - p_, static_cast<int>(positions_) - k);
  }

  constexpr std::size_t kChunk = 4096;
  std::vector<text::TokenList> docs;
  for (std::size_t start = 0; start < patterns; start += kChunk) {
    const std::size_t stop = std::min(patterns, start + kChunk);
    docs.clear();
    for (std::size_t s = start; s < stop; ++s) {
      text::TokenList tokens;
      tokens.reserve(positions_);
      for (std::size_t i = 0; i < positions_; ++i) {
        const bool perturbed = (s >> i) & 1U;
        if (!perturbed) {
          tokens.push_back(xi[i]);
        } else if (removal == Removal::kMask) {
          tokens.push_back(mask_token);
        }
      }
      docs.push_back(std::move(tokens));
    }
    const auto preds = model.predict_batch(docs);
    for (std::size_t s = start; s < stop; ++s) {
      prediction_[s] = predictor::target_score(preds[s - start], target_class);
    }
  }
  NeumaierSum mean;
  for (std::size_t s = 0; s < patterns; ++s) mean.add(probability_[s] * prediction_[s]);
  mean_ = mean.value();
}

double ExactDistribution::total_probability() const {
  NeumaierSum total;
  for (double p : probability_) total.add(p);
  return total.value();
}

double ExactDistribution::exclusion_probability(std::span<const std::size_t> positions) const {
  const std::size_t bits = to_bits(positions, positions_);
  return std::pow(p_, std::popcount(bits));
}

double ExactDistribution::excluded_mass(std::span<const std::size_t> positions) const {
  const std::size_t bits = to_bits(positions, positions_);
  const std::size_t free = ((std::size_t{1} << positions_) - 1) & ~bits;
  NeumaierSum sum;
  // Enumerate the supersets of `bits` through the submasks of `free`.
  for (std::size_t sub = free;; sub = (sub - 1) & free) {
    const std::size_t s = sub | bits;
    sum.add(probability_[s] * prediction_[s]);
    if (sub == 0) break;
  }
  return sum.value();
}

double ExactDistribution::candidate_drop(std::span<const std::size_t> positions) const {
  return mean_ - excluded_mass(positions) / exclusion_probability(positions);
}

double ExactDistribution::conditional_variance(std::span<const std::size_t> positions) const {
  const std::size_t bits = to_bits(positions, positions_);
  const std::size_t free = ((std::size_t{1} << positions_) - 1) & ~bits;
  const double mass = exclusion_probability(positions);
  NeumaierSum first, second;
  for (std::size_t sub = free;; sub = (sub - 1) & free) {
    const std::size_t s = sub | bits;
    const double w = probability_[s] / mass;
    first.add(w * prediction_[s]);
    second.add(w * prediction_[s] * prediction_[s]);
    if (sub == 0) break;
  }
  const double m = first.value();
  return std::max(0.0, second.value() - m * m);
}

double exact_candidate_drop(const predictor::Predictor& model, const text::Document& xi,
                            std::span<const std::size_t> positions, double p_perturb,
                            std::size_t target_class) {
  const ExactDistribution dist(xi, model, p_perturb, target_class);
  return dist.candidate_drop(positions);
}

double linear_drop_closed_form(std::span<const double> weighted_idf,
                               std::span<const std::size_t> counts, double q_keep) {
  if (weighted_idf.size() != counts.size()) {
    throw InvalidInputError("weights and counts differ in length");
  }
  NeumaierSum sum;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    sum.add(weighted_idf[j] * static_cast<double>(counts[j]));
  }
  return q_keep * sum.value();
}

double shortcut_drop_closed_form(std::span<const std::size_t> multiplicities,
                                 std::span<const std::size_t> counts, double p_perturb) {
  if (multiplicities.size() != counts.size()) {
    throw InvalidInputError("multiplicities and counts differ in length");
  }
  double present = 1.0;
  double conditional = 1.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] > multiplicities[j]) throw InvalidInputError("count exceeds multiplicity");
    present *= 1.0 - std::pow(p_perturb, static_cast<double>(multiplicities[j]));
    conditional *= 1.0 - std::pow(p_perturb, static_cast<double>(multiplicities[j] - counts[j]));
  }
  return present - conditional;
}

std::vector<std::vector<std::size_t>> all_candidates(std::size_t b, std::size_t l_max) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t size = 1; size <= std::min(b, l_max); ++size) {
    std::vector<std::size_t> c(size);
    for (std::size_t i = 0; i < size; ++i) c[i] = i;
    while (true) {
      out.push_back(c);
      std::size_t i = size;
      while (i > 0 && c[i - 1] == b - size + i - 1) --i;
      if (i == 0) break;
      ++c[i - 1];
      for (std::size_t k = i; k < size; ++k) c[k] = c[k - 1] + 1;
    }
  }
  return out;
}

OracleCandidate oracle_optimal_candidate(const ExactDistribution& dist, double epsilon,
                                         int l_max, double tie_tolerance) {
  if (l_max < 1) throw ConfigError("l_max must be at least 1");
  const double threshold = epsilon * dist.expected_prediction();
  const std::size_t b = dist.position_count();
  OracleCandidate best;
  bool have = false;
  std::size_t current_size = 0;
  for (const auto& c : all_candidates(b, static_cast<std::size_t>(l_max))) {
    if (c.size() != current_size) {
      if (have && best.drop >= threshold - tie_tolerance) {
        best.feasible = true;
        return best;
      }
      current_size = c.size();
    }
    const double drop = dist.candidate_drop(c);
    if (!have || drop > best.drop + tie_tolerance) {
      best.positions = c;
      best.drop = drop;
      have = true;
    }
  }
  best.feasible = have && best.drop >= threshold - tie_tolerance;
  return best;
}

std::map<std::string, std::size_t> word_counts(const text::TokenList& tokens,
                                               std::span<const std::size_t> positions) {
  std::map<std::string, std::size_t> counts;
  for (auto p : positions) ++counts[tokens.at(p)];
  return counts;
}

std::vector<std::size_t> best_shortcut_allocation(std::span<const std::size_t> multiplicities,
                                                  std::size_t removals, double p_perturb) {
  const std::size_t k = multiplicities.size();
  std::vector<std::size_t> current(k, 0), best;
  double best_drop = -1.0;
  auto recurse = [&](auto&& self, std::size_t j, std::size_t left) -> void {
    if (j == k) {
      if (left != 0) return;
      const double drop = shortcut_drop_closed_form(multiplicities, current, p_perturb);
      if (drop > best_drop + 1e-15) {
        best_drop = drop;
        best = current;
      }
      return;
    }
    for (std::size_t c = std::min(left, multiplicities[j]) + 1; c-- > 0;) {
      current[j] = c;
      self(self, j + 1, left - c);
    }
    current[j] = 0;
  };
  recurse(recurse, 0, removals);
  return best;
}

}  // namespace fred::oracle
