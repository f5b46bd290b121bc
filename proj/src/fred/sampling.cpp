#include "fred/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fred/error.hpp"
#include "fred/rng.hpp"

namespace fred::sampling {

std::string_view scheme_name(Scheme scheme) {
  return scheme == Scheme::kMask ? "mask" : "pos";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "mask") return Scheme::kMask;
  if (name == "pos") return Scheme::kPos;
  throw ConfigError("unknown sampling scheme '" + std::string(name) + "' (expected mask or pos)");
}

SamplingConfig SamplingConfig::normalized() const {
  SamplingConfig cfg = *this;
  if (!std::isfinite(cfg.p_perturb)) throw ConfigError("--p must be a finite probability");
  cfg.p_perturb = std::clamp(cfg.p_perturb, 0.01, 0.99);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  if (cfg.l_max < 1) throw ConfigError("--l-max must be at least 1");
  if (cfg.mask_token.empty()) throw ConfigError("--mask-token must not be empty");
  if (cfg.n_override && *cfg.n_override == 0) throw ConfigError("--n must be positive");
  return cfg;
}

std::size_t SamplingConfig::sample_count() const {
  return n_override ? *n_override : required_sample_size(alpha, p_perturb, l_max);
}

std::size_t PerturbationSample::perturbed_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::size_t required_sample_size(double alpha, double p_perturb, int l_max) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
  if (!(p_perturb > 0.0 && p_perturb < 1.0)) throw ConfigError("p_perturb must lie in (0, 1)");
  if (l_max < 1) throw ConfigError("l_max must be at least 1");
  const double exclusion = std::pow(p_perturb, l_max);
  const double denom = std::log1p(-exclusion);
  if (denom == 0.0) throw ConfigError("p_perturb^l_max underflows; sample size is unbounded");
  const double ratio = std::log1p(-alpha) / denom;
  if (ratio > 1e12) throw ConfigError("required sample size exceeds 1e12");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

std::vector<PerturbationSample> mask_sample(const Document& xi, const SamplingConfig& cfg,
                                            std::size_t n) {
  if (xi.empty()) throw InvalidInputError("cannot sample perturbations of an empty document");
  Rng rng(cfg.seed);
  std::vector<PerturbationSample> samples(n);
  for (auto& s : samples) {
    s.tokens = xi.tokens();
    s.mask.assign(xi.size(), false);
    for (std::size_t i = 0; i < xi.size(); ++i) {
      if (rng.bernoulli(cfg.p_perturb)) {
        s.mask[i] = true;
        s.tokens[i] = cfg.mask_token;
      }
    }
  }
  return samples;
}

namespace {

Sentiment parse_sentiment(std::string_view s, const std::string& where) {
  if (s == "pos" || s == "positive") return Sentiment::kPositive;
  if (s == "neg" || s == "negative") return Sentiment::kNegative;
  if (s == "neu" || s == "neutral") return Sentiment::kNeutral;
  throw ConfigError(where + ": sentiment must be pos, neg or neu, got '" + std::string(s) + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> sorted_union(std::initializer_list<const std::vector<std::string>*> parts) {
  std::set<std::string> all;
  for (const auto* p : parts) all.insert(p->begin(), p->end());
  return {all.begin(), all.end()};
}

}  // namespace

PosLexicon PosLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file: " + path);
  return parse(in, path);
}

PosLexicon PosLexicon::parse(std::istream& in, const std::string& source) {
  PosLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(trim(col));
    const std::string where = source + ":" + std::to_string(line_no);
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw ConfigError(where + ": expected token<TAB>pos<TAB>sentiment");
    }
    lex.add(cols[0], cols[1], parse_sentiment(cols[2], where));
  }
  lex.rebuild();
  return lex;
}

void PosLexicon::add(std::string_view token, std::string tag, Sentiment sentiment) {
  entries_.insert_or_assign(text::normalize_token(token), Entry{std::move(tag), sentiment});
  dirty_ = true;
}

std::optional<PosLexicon::Entry> PosLexicon::lookup(std::string_view token) const {
  auto it = entries_.find(token);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void PosLexicon::rebuild() const {
  struct Buckets {
    std::vector<std::string> pos, neg, neu;
  };
  std::map<std::string, Buckets, std::less<>> by_tag;
  std::vector<std::string> neutral;
  for (const auto& [token, entry] : entries_) {
    auto& b = by_tag[entry.tag];
    switch (entry.sentiment) {
      case Sentiment::kPositive: b.pos.push_back(token); break;
      case Sentiment::kNegative: b.neg.push_back(token); break;
      case Sentiment::kNeutral:
        b.neu.push_back(token);
        neutral.push_back(token);
        break;
    }
  }
  pools_.clear();
  for (const auto& [tag, b] : by_tag) {
    pools_[tag] = TagPools{sorted_union({&b.neg, &b.neu}), sorted_union({&b.pos, &b.neu}),
                           sorted_union({&b.pos, &b.neg, &b.neu})};
  }
  neutral_vocabulary_ = sorted_union({&neutral});
  dirty_ = false;
}

const std::vector<std::string>& PosLexicon::replacement_pool(std::string_view token) const {
  if (dirty_) rebuild();
  auto it = entries_.find(token);
  if (it == entries_.end()) return neutral_vocabulary_;
  const auto& pools = pools_.at(it->second.tag);
  switch (it->second.sentiment) {
    case Sentiment::kPositive: return pools.for_positive;
    case Sentiment::kNegative: return pools.for_negative;
    case Sentiment::kNeutral: break;
  }
  return it->second.tag == kOtherTag ? neutral_vocabulary_ : pools.for_neutral;
}

std::vector<PerturbationSample> pos_sample(const Document& xi, const SamplingConfig& cfg,
                                           const PosLexicon& lexicon, std::size_t n) {
  if (xi.empty()) throw InvalidInputError("cannot sample perturbations of an empty document");
  std::vector<const std::vector<std::string>*> pools(xi.size());
  std::vector<std::optional<std::size_t>> original_index(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    pools[i] = &lexicon.replacement_pool(xi[i]);
    auto it = std::lower_bound(pools[i]->begin(), pools[i]->end(), xi[i]);
    if (it != pools[i]->end() && *it == xi[i]) {
      original_index[i] = static_cast<std::size_t>(it - pools[i]->begin());
    }
  }

  Rng rng(cfg.seed);
  std::vector<PerturbationSample> samples(n);
  for (auto& s : samples) {
    s.tokens = xi.tokens();
    s.mask.assign(xi.size(), false);
    for (std::size_t i = 0; i < xi.size(); ++i) {
      if (!rng.bernoulli(cfg.p_perturb)) continue;
      s.mask[i] = true;
      const auto& pool = *pools[i];
      if (pool.empty()) {
        s.tokens[i] = cfg.mask_token;
      } else if (pool.size() >= 2 && original_index[i]) {
        std::size_t k = rng.uniform_index(pool.size() - 1);
        if (k >= *original_index[i]) ++k;
        s.tokens[i] = pool[k];
      } else {
        s.tokens[i] = pool[rng.uniform_index(pool.size())];
      }
    }
  }
  return samples;
}

}  // namespace fred::sampling
