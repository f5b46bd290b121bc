#include "fred/explainer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <limits>
#include <set>
#include <thread>

#include "fred/error.hpp"

namespace fred::explainer {

double sample_drops(std::span<PerturbationSample> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += s.prediction;
  const double mean = sum / static_cast<double>(samples.size());
  for (auto& s : samples) s.drop = mean - s.prediction;
  return mean;
}

DropTable::DropTable(std::span<const PerturbationSample> samples) {
  if (samples.empty()) throw InvalidInputError("drop table needs at least one sample");
  positions_ = samples.front().mask.size();
  words_ = (samples.size() + 63) / 64;
  bits_.assign(positions_ * words_, 0);
  predictions_.reserve(samples.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.mask.size() != positions_) throw InvalidInputError("samples disagree on document length");
    predictions_.push_back(s.prediction);
    sum += s.prediction;
    for (std::size_t p = 0; p < positions_; ++p) {
      if (s.mask[p]) bits_[p * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
    }
  }
  mean_ = sum / static_cast<double>(samples.size());
}

double DropTable::masked_sum(const std::uint64_t* mask, std::size_t& count) const {
  double sum = 0.0;
  count = 0;
  for (std::size_t w = 0; w < words_; ++w) {
    std::uint64_t bits = mask[w];
    count += static_cast<std::size_t>(std::popcount(bits));
    while (bits) {
      const int b = std::countr_zero(bits);
      sum += predictions_[w * 64 + static_cast<std::size_t>(b)];
      bits &= bits - 1;
    }
  }
  return sum;
}

std::optional<Candidate> DropTable::evaluate(std::span<const std::size_t> positions) const {
  if (positions.empty()) return std::nullopt;
  std::vector<std::uint64_t> acc(column(positions[0]), column(positions[0]) + words_);
  for (std::size_t k = 1; k < positions.size(); ++k) {
    const auto* col = column(positions[k]);
    for (std::size_t w = 0; w < words_; ++w) acc[w] &= col[w];
  }
  std::size_t count = 0;
  const double sum = masked_sum(acc.data(), count);
  if (count == 0) return std::nullopt;
  Candidate c;
  c.positions.assign(positions.begin(), positions.end());
  std::sort(c.positions.begin(), c.positions.end());
  c.n_excluding = count;
  c.drop = mean_ - sum / static_cast<double>(count);
  return c;
}

std::optional<double> empirical_drop(const DropTable& table,
                                     std::span<const std::size_t> positions) {
  auto c = table.evaluate(positions);
  if (!c) return std::nullopt;
  return c->drop;
}

std::vector<std::optional<double>> token_scores(const DropTable& table) {
  std::vector<std::optional<double>> scores(table.position_count());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t pos[] = {i};
    scores[i] = empirical_drop(table, pos);
  }
  return scores;
}

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / (n - k + i)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * (n - k + i) / i;
  }
  return r;
}

struct LevelBest {
  std::optional<Candidate> best;
  std::uint64_t evaluated = 0;
  std::uint64_t skipped = 0;

  void offer(const std::vector<std::size_t>& positions, std::size_t count, double drop) {
    ++evaluated;
    if (!best || drop > best->drop) best = Candidate{positions, count, drop};
  }
};

// Enumerates, in lexicographic order, every size-`size` combination of `pool`
// whose first element is pool[first].
void enumerate_from(const DropTable& table, const std::vector<std::size_t>& pool,
                    std::size_t first, std::size_t size, LevelBest& out) {
  const std::size_t words = table.words();
  std::vector<std::vector<std::uint64_t>> stack(size, std::vector<std::uint64_t>(words));
  std::vector<std::size_t> chosen(size);
  std::vector<std::size_t> positions(size);
  const double mean = table.mean_prediction();

  std::copy_n(table.column(pool[first]), words, stack[0].begin());
  chosen[0] = first;
  positions[0] = pool[first];

  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == size) {
      std::size_t count = 0;
      const double sum = table.masked_sum(stack[size - 1].data(), count);
      if (count == 0) {
        ++out.skipped;
        return;
      }
      out.offer(positions, count, mean - sum / static_cast<double>(count));
      return;
    }
    for (std::size_t k = chosen[depth - 1] + 1; k + (size - depth) <= pool.size(); ++k) {
      const auto* col = table.column(pool[k]);
      const auto& prev = stack[depth - 1];
      auto& cur = stack[depth];
      bool any = false;
      for (std::size_t w = 0; w < words; ++w) {
        cur[w] = prev[w] & col[w];
        any |= cur[w] != 0;
      }
      if (!any) {
        out.skipped += binomial(pool.size() - k - 1, size - depth - 1);
        continue;
      }
      chosen[depth] = k;
      positions[depth] = pool[k];
      self(self, depth + 1);
    }
  };
  if (size == 1) {
    std::size_t count = 0;
    const double sum = table.masked_sum(stack[0].data(), count);
    if (count == 0) {
      ++out.skipped;
    } else {
      out.offer(positions, count, mean - sum / static_cast<double>(count));
    }
    return;
  }
  bool any = std::any_of(stack[0].begin(), stack[0].end(), [](auto w) { return w != 0; });
  if (!any) {
    out.skipped += binomial(pool.size() - first - 1, size - 1);
    return;
  }
  recurse(recurse, 1);
}

LevelBest search_level(const DropTable& table, const std::vector<std::size_t>& pool,
                       std::size_t size, unsigned threads) {
  const std::size_t tasks = pool.size() >= size ? pool.size() - size + 1 : 0;
  std::vector<LevelBest> results(tasks);
  if (threads <= 1 || tasks <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) enumerate_from(table, pool, t, size, results[t]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
    for (unsigned w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
          enumerate_from(table, pool, t, size, results[t]);
        }
      });
    }
  }
  // Merge in task order: tasks are lexicographically ordered by first element,
  // so a strict comparison keeps the lexicographically smallest among ties.
  LevelBest merged;
  for (auto& r : results) {
    merged.evaluated += r.evaluated;
    merged.skipped += r.skipped;
    if (r.best && (!merged.best || r.best->drop > merged.best->drop)) merged.best = std::move(r.best);
  }
  return merged;
}

}  // namespace

SearchResult find_minimal_subset(const DropTable& table,
                                 std::span<const std::optional<double>> scores,
                                 const SearchConfig& config) {
  const std::size_t b = table.position_count();
  if (b == 0) throw InvalidInputError("cannot explain an empty document");
  if (scores.size() != b) throw InvalidInputError("score vector length differs from document length");
  if (config.l_max < 1) throw ConfigError("l_max must be at least 1");

  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : config.threads;

  SearchResult result;
  result.threshold = config.epsilon * table.mean_prediction();

  // Pool for sizes >= 2: top pool_size positions by singleton score (position
  // breaks ties), enumerated in ascending position order.
  std::vector<std::size_t> all(b);
  for (std::size_t i = 0; i < b; ++i) all[i] = i;
  if (config.pool_size >= b) {
    result.pool = all;
  } else {
    std::vector<std::size_t> ranked;
    for (std::size_t i = 0; i < b; ++i) {
      if (scores[i]) ranked.push_back(i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t c) { return *scores[a] > *scores[c]; });
    ranked.resize(std::min(ranked.size(), config.pool_size));
    std::sort(ranked.begin(), ranked.end());
    result.pool = std::move(ranked);
  }

  const std::size_t max_size = static_cast<std::size_t>(config.l_max);
  for (std::size_t size = 1; size <= max_size; ++size) {
    const auto& candidates = size == 1 ? all : result.pool;
    if (candidates.size() < size) break;
    auto level = search_level(table, candidates, size, threads);
    result.evaluated += level.evaluated;
    result.skipped += level.skipped;
    if (level.best && (!result.best || level.best->drop > result.best->drop)) {
      result.best = std::move(level.best);
    }
    if (result.best && result.best->drop >= result.threshold) {
      result.threshold_met = true;
      break;
    }
  }
  return result;
}

std::vector<Counterfactual> counterfactuals(std::span<const PerturbationSample> samples,
                                            std::span<const predictor::Prediction> predictions,
                                            std::size_t original_class, std::size_t k) {
  if (samples.size() != predictions.size()) {
    throw InvalidInputError("samples and predictions differ in length");
  }
  std::vector<std::pair<std::size_t, std::size_t>> flips;  // (n_perturbed, index)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (predictor::argmax(predictions[i]) != original_class) {
      flips.emplace_back(samples[i].perturbed_count(), i);
    }
  }
  std::sort(flips.begin(), flips.end());
  std::vector<Counterfactual> out;
  std::set<TokenList> seen;
  for (const auto& [count, i] : flips) {
    if (out.size() >= k) break;
    if (!seen.insert(samples[i].tokens).second) continue;
    out.push_back({samples[i].tokens, count, predictor::argmax(predictions[i])});
  }
  return out;
}

Explanation explain(const text::Document& xi, const predictor::Predictor& model,
                    const ExplainConfig& config, const sampling::PosLexicon* lexicon) {
  const auto start = std::chrono::steady_clock::now();
  if (xi.empty()) throw InvalidInputError("cannot explain an empty document");

  Explanation e;
  e.config = config;
  e.config.sampling = config.sampling.normalized();
  const auto& scfg = e.config.sampling;
  if (!(config.epsilon >= 0.0 && config.epsilon < 1.0)) throw ConfigError("--epsilon must lie in [0, 1)");
  if (config.pool_size == 0) throw ConfigError("--pool-size must be at least 1");
  if (scfg.scheme == sampling::Scheme::kPos && lexicon == nullptr) {
    throw ConfigError("--sampling pos requires --lexicon");
  }
  if (model.recognizes_token(scfg.mask_token)) {
    throw ConfigError("mask token '" + scfg.mask_token +
                      "' is part of the model vocabulary; choose another --mask-token");
  }

  std::optional<predictor::MemoizingPredictor> memo;
  if (model.is_remote()) memo.emplace(model);
  const predictor::Predictor& f = memo ? static_cast<const predictor::Predictor&>(*memo) : model;

  e.tokens = xi.tokens();
  const auto original = f.predict(xi.tokens());
  e.original_class = predictor::argmax(original);
  e.target_class = config.target_class.value_or(original.regression ? 0 : e.original_class);
  e.original_prediction = predictor::target_score(original, e.target_class);

  e.sample_count = scfg.sample_count();
  auto samples = scfg.scheme == sampling::Scheme::kMask
                     ? sampling::mask_sample(xi, scfg, e.sample_count)
                     : sampling::pos_sample(xi, scfg, *lexicon, e.sample_count);

  std::vector<TokenList> docs;
  docs.reserve(samples.size());
  for (const auto& s : samples) docs.push_back(s.tokens);
  const auto predictions = f.predict_batch(docs);
  if (predictions.size() != samples.size()) {
    throw Error(ErrorKind::kInternal, "model returned the wrong number of predictions");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].prediction = predictor::target_score(predictions[i], e.target_class);
  }
  e.mean_prediction = sample_drops(samples);

  const DropTable table(samples);
  e.token_scores = token_scores(table);
  std::size_t never = 0;
  for (const auto& s : e.token_scores) never += s ? 0 : 1;
  if (never > 0) {
    e.warnings.push_back(std::to_string(never) +
                         " position(s) never perturbed; their scores are undefined");
  }

  SearchConfig search{config.epsilon, scfg.l_max, config.pool_size, config.threads};
  auto found = find_minimal_subset(table, e.token_scores, search);
  e.minimal_subset = std::move(found.best);
  e.threshold_met = found.threshold_met;
  e.threshold = found.threshold;
  if (found.skipped > 0) {
    e.warnings.push_back(std::to_string(found.skipped) +
                         " candidate(s) skipped: no sample perturbs all of their positions");
  }

  if (original.regression) {
    e.counterfactuals_available = false;
    e.warnings.push_back("counterfactuals are unavailable for regression outputs");
  } else {
    e.counterfactuals = counterfactuals(samples, predictions, e.original_class,
                                        config.n_counterfactuals);
  }
  e.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

nlohmann::json config_to_json(const ExplainConfig& config, std::size_t sample_count) {
  const auto& s = config.sampling;
  nlohmann::json j = {
      {"sampling", sampling::scheme_name(s.scheme)},
      {"p", s.p_perturb},
      {"alpha", s.alpha},
      {"l_max", s.l_max},
      {"n", sample_count},
      {"seed", s.seed},
      {"mask_token", s.mask_token},
      {"epsilon", config.epsilon},
      {"pool_size", config.pool_size},
      {"k", config.n_counterfactuals},
  };
  j["target_class"] = config.target_class ? nlohmann::json(*config.target_class)
                                          : nlohmann::json("argmax");
  return j;
}

nlohmann::json to_json(const Explanation& e, bool include_timing) {
  nlohmann::json subset = {{"positions", nlohmann::json::array()},
                           {"words", nlohmann::json::array()},
                           {"drop", nullptr},
                           {"threshold_met", e.threshold_met}};
  if (e.minimal_subset) {
    subset["positions"] = e.minimal_subset->positions;
    for (auto p : e.minimal_subset->positions) subset["words"].push_back(e.tokens[p]);
    subset["drop"] = e.minimal_subset->drop;
  }
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : e.token_scores) scores.push_back(s ? nlohmann::json(*s) : nlohmann::json());
  nlohmann::json cfs = nlohmann::json::array();
  for (const auto& c : e.counterfactuals) {
    cfs.push_back({{"text", text::join_tokens(c.tokens)},
                   {"n_perturbed", c.n_perturbed},
                   {"class", c.predicted_class}});
  }
  nlohmann::json j = {
      {"tokens", e.tokens},
      {"minimal_subset", subset},
      {"scores", scores},
      {"counterfactuals", cfs},
      {"mean_prediction", e.mean_prediction},
      {"original_prediction", e.original_prediction},
      {"target_class", e.target_class},
      {"threshold", e.threshold},
      {"config", config_to_json(e.config, e.sample_count)},
      {"warnings", e.warnings},
  };
  j["wall_time_s"] = include_timing ? nlohmann::json(e.wall_time_s) : nlohmann::json();
  return j;
}

}  // namespace fred::explainer
