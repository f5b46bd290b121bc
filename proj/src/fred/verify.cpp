#include "fred/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "fred/error.hpp"
#include "fred/explainer.hpp"
#include "fred/oracle.hpp"
#include "fred/predictor.hpp"
#include "fred/rng.hpp"
#include "fred/sampling.hpp"

namespace fred::verify {
namespace {

using predictor::LinearTfIdfModel;
using predictor::Link;
using predictor::ShortcutModel;
using text::Document;
using text::TokenList;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string word(const char* prefix, std::size_t i) { return prefix + std::to_string(i); }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

void shuffle(TokenList& tokens, Rng& rng) {
  for (std::size_t i = tokens.size(); i > 1; --i) {
    std::swap(tokens[i - 1], tokens[rng.uniform_index(i)]);
  }
}

// Corpus whose documents each hold a random subset of `vocab`; every word in
// `forced` occurs in at least one document.
std::vector<std::vector<std::string>> random_corpus(Rng& rng, const std::vector<std::string>& vocab,
                                                    const std::vector<std::string>& forced,
                                                    std::size_t n_docs) {
  std::vector<std::vector<std::string>> docs(n_docs);
  for (auto& d : docs) {
    for (const auto& w : vocab) {
      if (rng.bernoulli(0.5)) d.push_back(w);
    }
  }
  for (const auto& w : forced) {
    auto& d = docs[rng.uniform_index(n_docs)];
    if (std::find(d.begin(), d.end(), w) == d.end()) d.push_back(w);
  }
  return docs;
}

text::Corpus to_corpus(const std::vector<std::vector<std::string>>& docs) {
  std::vector<std::string> texts;
  for (const auto& d : docs) {
    std::string t;
    for (const auto& w : d) t += (t.empty() ? "" : " ") + w;
    texts.push_back(t.empty() ? "empty" : t);
  }
  return text::Corpus::from_texts(texts);
}

// ln((N + 1) / (N_j + 1)) + 1 from raw document counts.
std::map<std::string, double> reference_idf(const std::vector<std::vector<std::string>>& docs) {
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::set<std::string> seen(d.begin(), d.end());
    if (seen.empty()) seen.insert("empty");
    for (const auto& w : seen) ++df[w];
  }
  const double n = static_cast<double>(docs.size());
  std::map<std::string, double> idf;
  for (const auto& [w, count] : df) idf[w] = std::log((n + 1.0) / (static_cast<double>(count) + 1.0)) + 1.0;
  return idf;
}

struct LinearInstance {
  Document doc;
  std::unique_ptr<LinearTfIdfModel> model;
  // lambda_j * idf_j per token of the document, with the reference idf.
  std::map<std::string, double> weighted_idf;
};

LinearInstance random_linear(Rng& rng, std::size_t max_positions, Link link, double scale,
                             const text::IdfFunction& idf_fn = text::smooth_idf) {
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < 6; ++i) vocab.push_back(word("w", i));
  const auto docs = random_corpus(rng, vocab, {}, 6);
  const auto corpus = to_corpus(docs);
  const auto idf = reference_idf(docs);

  std::map<std::string, double> coefficients;
  for (const auto& w : vocab) coefficients[w] = uniform(rng, -scale, scale);
  const double intercept = link == Link::kLogistic ? uniform(rng, -0.5, 0.5) : 0.0;

  const std::size_t b = 2 + rng.uniform_index(max_positions - 1);
  TokenList tokens;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t k = rng.uniform_index(vocab.size() + 2);
    tokens.push_back(k < vocab.size() ? vocab[k] : word("z", k - vocab.size()));
  }
  LinearInstance inst;
  inst.doc = Document(tokens);
  for (const auto& t : inst.doc.local_dictionary()) {
    auto c = coefficients.find(t);
    auto i = idf.find(t);
    inst.weighted_idf[t] = (c != coefficients.end() && i != idf.end()) ? c->second * i->second : 0.0;
  }
  inst.model = std::make_unique<LinearTfIdfModel>(text::TfIdfVectorizer::fit(corpus, idf_fn),
                                                  coefficients, intercept, link);
  return inst;
}

struct ShortcutInstance {
  Document doc;
  std::unique_ptr<ShortcutModel> model;
  std::vector<std::string> shortcut;
};

ShortcutInstance random_shortcut(Rng& rng, std::size_t max_positions) {
  ShortcutInstance inst;
  const std::size_t k = 1 + rng.uniform_index(3);
  TokenList tokens;
  for (std::size_t j = 0; j < k; ++j) {
    inst.shortcut.push_back(word("s", j));
    const std::size_t m = rng.bernoulli(0.1) ? 0 : 1 + rng.uniform_index(3);
    for (std::size_t r = 0; r < m && tokens.size() < max_positions; ++r) tokens.push_back(inst.shortcut.back());
  }
  const std::size_t fillers = rng.uniform_index(4);
  for (std::size_t f = 0; f < fillers && tokens.size() < max_positions; ++f) {
    tokens.push_back(word("f", rng.uniform_index(3)));
  }
  if (tokens.empty()) tokens.push_back("f0");
  shuffle(tokens, rng);
  inst.doc = Document(tokens);
  inst.model = std::make_unique<ShortcutModel>(inst.shortcut);
  return inst;
}

std::vector<double> sample_predictions(const Document& doc, const predictor::Predictor& model,
                                       std::size_t target, std::size_t n, std::uint64_t seed,
                                       std::vector<sampling::PerturbationSample>& samples) {
  sampling::SamplingConfig cfg;
  cfg.seed = seed;
  samples = sampling::mask_sample(doc, cfg, n);
  std::vector<TokenList> batch;
  batch.reserve(n);
  for (const auto& s : samples) batch.push_back(s.tokens);
  const auto preds = model.predict_batch(batch);
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    samples[i].prediction = predictor::target_score(preds[i], target);
    out.push_back(samples[i].prediction);
  }
  return out;
}

std::vector<std::size_t> counts_for(const std::vector<std::string>& words,
                                    const TokenList& tokens,
                                    std::span<const std::size_t> positions) {
  const auto wc = oracle::word_counts(tokens, positions);
  std::vector<std::size_t> counts;
  for (const auto& w : words) {
    auto it = wc.find(w);
    counts.push_back(it == wc.end() ? 0 : it->second);
  }
  return counts;
}

std::string describe_counts(const std::map<std::string, std::size_t>& counts) {
  std::string s = "{";
  for (const auto& [w, c] : counts) s += (s.size() > 1 ? ", " : "") + w + ":" + std::to_string(c);
  return s + "}";
}

}  // namespace

CheckResult check_sample_size() {
  Stopwatch clock;
  CheckResult r;
  r.name = "sample-size";
  std::size_t mismatches = 0;
  std::string first;
  for (double alpha : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      for (int l = 1; l <= 6; ++l) {
        const std::size_t n = sampling::required_sample_size(alpha, p, l);
        const double miss = 1.0 - std::pow(p, l);
        std::size_t brute = 1;
        double never = miss;
        while (1.0 - never < alpha) {
          never *= miss;
          ++brute;
        }
        if (brute != n) {
          ++mismatches;
          if (first.empty()) {
            first = "alpha=" + fmt(alpha) + " p=" + fmt(p) + " l=" + std::to_string(l) + ": " +
                    std::to_string(n) + " vs brute force " + std::to_string(brute);
          }
        }
      }
    }
  }
  const std::size_t small = sampling::required_sample_size(0.95, 0.5, 1);
  const std::size_t unit = sampling::required_sample_size(0.5, 0.5, 1);
  const std::size_t dflt = sampling::required_sample_size(0.95, 0.5, 10);
  r.stats = {{"grid_mismatches", mismatches}, {"n_default", dflt}, {"n_l1", small}, {"n_alpha_half", unit}};
  r.passed = mismatches == 0 && small == 5 && unit == 1;
  r.detail = r.passed ? "150 grid points agree; defaults give n=" + std::to_string(dflt)
                      : (first.empty() ? "fixed points differ" : first);
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_estimator_consistency(const EstimatorOptions& o) {
  Stopwatch clock;
  CheckResult r;
  r.name = "estimator";
  Rng rng(mix_seed(o.seed, 1));
  double worst = 0.0;
  std::size_t compared = 0;
  std::string worst_where;
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    const int family = static_cast<int>(inst % 3);
    std::unique_ptr<predictor::Predictor> model;
    Document doc;
    std::size_t target = 1;
    if (family == 0 || family == 1) {
      const Link link = family == 0 ? Link::kIdentity : Link::kLogistic;
      auto li = random_linear(rng, o.max_positions, link, family == 0 ? 0.3 : 1.0);
      doc = li.doc;
      model = std::move(li.model);
      target = family == 0 ? 0 : 1;
    } else {
      auto si = random_shortcut(rng, o.max_positions);
      doc = si.doc;
      model = std::move(si.model);
    }
    const oracle::ExactDistribution dist(doc, *model, 0.5, target);
    const auto candidates = oracle::all_candidates(doc.size(), o.max_candidate_size);
    std::vector<double> sum(candidates.size(), 0.0);
    std::vector<std::size_t> defined(candidates.size(), 0);
    for (std::size_t rep = 0; rep < o.repeats; ++rep) {
      std::vector<sampling::PerturbationSample> samples;
      sample_predictions(doc, *model, target, o.samples, mix_seed(o.seed, inst * 1000 + rep), samples);
      const explainer::DropTable table(samples);
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (auto d = explainer::empirical_drop(table, candidates[c])) {
          sum[c] += *d;
          ++defined[c];
        }
      }
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (defined[c] == 0) continue;
      const double err = std::abs(sum[c] / static_cast<double>(defined[c]) - dist.candidate_drop(candidates[c]));
      ++compared;
      if (err > worst) {
        worst = err;
        worst_where = "instance " + std::to_string(inst) + " (" + model->describe() + ")";
      }
    }
  }
  r.stats = {{"max_abs_error", worst}, {"candidates", compared}, {"tolerance", o.tolerance},
             {"samples", o.samples}, {"repeats", o.repeats}};
  r.passed = compared > 0 && worst <= o.tolerance;
  r.detail = "max |empirical - exact| = " + fmt(worst) + " over " + std::to_string(compared) +
             " candidates, n=" + std::to_string(o.samples) +
             (o.repeats > 1 ? " averaged over " + std::to_string(o.repeats) + " runs" : "") +
             (r.passed ? "" : ", worst at " + worst_where);
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_sample_coverage(const CoverageOptions& o) {
  Stopwatch clock;
  CheckResult r;
  r.name = "coverage";
  const std::size_t n = sampling::required_sample_size(o.alpha, o.p_perturb, o.l_max);
  const std::size_t b = static_cast<std::size_t>(o.l_max);
  TokenList tokens;
  for (std::size_t i = 0; i < b; ++i) tokens.push_back(word("t", i));
  const Document doc(tokens);
  sampling::SamplingConfig cfg;
  cfg.p_perturb = o.p_perturb;

  std::size_t misses = 0;
  for (std::size_t t = 0; t < o.trials; ++t) {
    cfg.seed = mix_seed(o.seed, t);
    const auto samples = sampling::mask_sample(doc, cfg, n);
    const bool covered = std::any_of(samples.begin(), samples.end(), [&](const auto& s) {
      return std::all_of(s.mask.begin(), s.mask.end(), [](bool m) { return m; });
    });
    misses += covered ? 0 : 1;
  }
  const double rate = static_cast<double>(misses) / static_cast<double>(o.trials);
  const double sigma = std::sqrt((1.0 - o.alpha) * o.alpha / static_cast<double>(o.trials));
  const double bound = 1.0 - o.alpha + 3.0 * sigma;

  // Same sample size on a longer document: average per-candidate miss rate
  // and the rate at which any size-l_max candidate is missed.
  const std::size_t wide = 10;
  TokenList wide_tokens;
  for (std::size_t i = 0; i < wide; ++i) wide_tokens.push_back(word("t", i));
  const Document wide_doc(wide_tokens);
  const auto candidates = oracle::all_candidates(wide, b);
  std::size_t per_candidate_misses = 0, per_candidate_total = 0, any_misses = 0;
  const std::size_t wide_trials = std::min<std::size_t>(o.trials, 200);
  for (std::size_t t = 0; t < wide_trials; ++t) {
    cfg.seed = mix_seed(o.seed ^ 0x5a5a, t);
    const auto samples = sampling::mask_sample(wide_doc, cfg, n);
    const explainer::DropTable table(samples);
    bool any = false;
    for (const auto& c : candidates) {
      if (c.size() != b) continue;
      ++per_candidate_total;
      if (!table.evaluate(c)) {
        ++per_candidate_misses;
        any = true;
      }
    }
    any_misses += any ? 1 : 0;
  }
  r.stats = {{"n", n}, {"miss_rate", rate}, {"bound", bound}, {"trials", o.trials},
             {"wide_per_candidate_miss_rate",
              static_cast<double>(per_candidate_misses) / static_cast<double>(per_candidate_total)},
             {"wide_any_candidate_miss_rate",
              static_cast<double>(any_misses) / static_cast<double>(wide_trials)}};
  r.passed = rate <= bound;
  r.detail = "n=" + std::to_string(n) + ", candidate missed in " + fmt(rate) +
             " of trials (bound " + fmt(bound) + ")";
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_linear_models(const LinearOptions& o) {
  Stopwatch clock;
  CheckResult r;
  r.name = "linear";
  Rng rng(mix_seed(o.seed, 2));
  const double p = 0.5, q = 1.0 - p;
  std::size_t determinate = 0, oracle_mismatch = 0, sampled_mismatch = 0, negative = 0,
              greedy_violations = 0;
  double closed_form_error = 0.0;
  std::string first_failure;
  auto fail = [&](std::size_t inst, const std::string& what) {
    if (first_failure.empty()) first_failure = "instance " + std::to_string(inst) + ": " + what;
  };

  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    // Designed effective weights w_j = lambda_j * idf_j.
    std::vector<std::string> words;
    std::vector<double> w;
    std::vector<std::size_t> m;
    TokenList tokens;
    double mean_f = 0.0, threshold = 0.0;
    std::size_t lstar = 0;
    std::map<std::string, std::size_t> expected;
    while (true) {
      words.clear(), w.clear(), m.clear(), tokens.clear(), expected.clear();
      const std::size_t n_pos = 1 + rng.uniform_index(4);
      const std::size_t n_neg = rng.uniform_index(3);
      std::vector<double> grid;
      for (int k = 1; k <= 10; ++k) grid.push_back(0.25 * k);
      for (std::size_t j = 0; j < n_pos; ++j) {
        const std::size_t k = rng.uniform_index(grid.size());
        w.push_back(grid[k]);
        grid.erase(grid.begin() + static_cast<std::ptrdiff_t>(k));
      }
      std::vector<double> neg_grid = {-0.25, -0.5, -0.75};
      for (std::size_t j = 0; j < n_neg; ++j) {
        const std::size_t k = rng.uniform_index(neg_grid.size());
        w.push_back(neg_grid[k]);
        neg_grid.erase(neg_grid.begin() + static_cast<std::ptrdiff_t>(k));
      }
      for (std::size_t j = 0; j < w.size(); ++j) {
        words.push_back(word("w", j));
        m.push_back(1 + rng.uniform_index(3));
        for (std::size_t r2 = 0; r2 < m.back(); ++r2) tokens.push_back(words.back());
      }
      const std::size_t fillers = rng.uniform_index(3);
      for (std::size_t f = 0; f < fillers; ++f) tokens.push_back(word("z", f));
      if (tokens.size() > o.max_positions) continue;

      std::vector<double> greedy;
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] > 0) greedy.insert(greedy.end(), m[j], w[j]);
      }
      std::sort(greedy.rbegin(), greedy.rend());
      lstar = 1 + rng.uniform_index(std::min<std::size_t>(greedy.size(), 4));
      double before = 0.0;
      for (std::size_t k = 0; k + 1 < lstar; ++k) before += greedy[k];
      threshold = q * (before + greedy[lstar - 1] / 2.0);
      mean_f = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) mean_f += q * w[j] * static_cast<double>(m[j]);
      if (!(threshold < 0.95 * mean_f)) continue;
      std::vector<std::size_t> order(w.size());
      for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
      std::size_t left = lstar;
      for (auto j : order) {
        if (left == 0 || w[j] <= 0) break;
        const std::size_t take = std::min(left, m[j]);
        expected[words[j]] = take;
        left -= take;
      }
      break;
    }
    const double epsilon = threshold / mean_f;
    shuffle(tokens, rng);
    const Document doc(tokens);

    std::vector<std::string> corpus_vocab = words;
    for (std::size_t k = 0; k < 3; ++k) corpus_vocab.push_back(word("c", k));
    const auto docs = random_corpus(rng, corpus_vocab, words, 10);
    const auto idf = reference_idf(docs);
    std::map<std::string, double> coefficients;
    for (std::size_t j = 0; j < words.size(); ++j) coefficients[words[j]] = w[j] / idf.at(words[j]);
    const LinearTfIdfModel model(text::TfIdfVectorizer::fit(to_corpus(docs), o.idf), coefficients, 0.0);

    const oracle::ExactDistribution dist(doc, model, p, 0);
    const auto& dict = doc.local_dictionary();
    std::vector<double> dict_w;
    for (const auto& t : dict) {
      auto it = std::find(words.begin(), words.end(), t);
      dict_w.push_back(it == words.end() ? 0.0 : w[static_cast<std::size_t>(it - words.begin())]);
    }

    // Exact drops of every candidate up to size lstar: closed-form agreement,
    // standard errors and the gaps that decide the sampled outcome.
    const auto candidates = oracle::all_candidates(doc.size(), lstar);
    const double var_all = dist.conditional_variance({});
    double se_max = 0.0, best_expected = -1e300, best_other = -1e300, best_smaller = -1e300;
    for (const auto& c : candidates) {
      const double drop = dist.candidate_drop(c);
      closed_form_error = std::max(
          closed_form_error, std::abs(drop - oracle::linear_drop_closed_form(dict_w, counts_for(dict, tokens, c), q)));
      const double n_c = static_cast<double>(o.samples) * std::pow(p, static_cast<double>(c.size()));
      se_max = std::max(se_max, std::sqrt(dist.conditional_variance(c) / n_c +
                                          var_all / static_cast<double>(o.samples)));
      if (c.size() < lstar) {
        best_smaller = std::max(best_smaller, drop);
      } else if (oracle::word_counts(tokens, c) == expected) {
        best_expected = std::max(best_expected, drop);
      } else {
        best_other = std::max(best_other, drop);
      }
    }
    const double gap = std::min({best_expected - threshold,
                                 lstar > 1 ? threshold - best_smaller : 1e300,
                                 best_expected - best_other});
    const bool is_determinate = gap > 3.0 * se_max;
    determinate += is_determinate ? 1 : 0;

    const auto exact = oracle::oracle_optimal_candidate(dist, epsilon, 10);
    const auto exact_counts = oracle::word_counts(tokens, exact.positions);
    if (exact_counts != expected || !exact.feasible) {
      ++oracle_mismatch;
      fail(inst, "oracle gives " + describe_counts(exact_counts) + ", expected " + describe_counts(expected));
    }

    explainer::ExplainConfig cfg;
    cfg.sampling.n_override = o.samples;
    cfg.sampling.seed = mix_seed(o.seed, 100 + inst);
    cfg.epsilon = epsilon;
    cfg.pool_size = doc.size();
    cfg.n_counterfactuals = 0;
    cfg.threads = 1;
    const auto e = explainer::explain(doc, model, cfg);
    const auto got = oracle::word_counts(tokens, e.subset_positions());

    bool has_negative = false;
    for (const auto& [t, c] : got) {
      auto it = std::find(words.begin(), words.end(), t);
      if (it == words.end() || w[static_cast<std::size_t>(it - words.begin())] <= 0) has_negative = true;
    }
    if (has_negative) {
      ++negative;
      fail(inst, "subset " + describe_counts(got) + " holds a word with non-positive weight");
    }
    // Prefix structure: once a word is partially used, lower-weight words are absent.
    std::vector<std::size_t> order(w.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
    bool open = true, greedy_ok = true;
    for (auto j : order) {
      const std::size_t c = got.count(words[j]) ? got.at(words[j]) : 0;
      if (!open && c > 0) greedy_ok = false;
      if (c < m[j]) open = false;
    }
    if (is_determinate) {
      if (!greedy_ok) {
        ++greedy_violations;
        fail(inst, "subset " + describe_counts(got) + " breaks the greedy order");
      }
      if (got != expected || !e.threshold_met) {
        ++sampled_mismatch;
        fail(inst, "explainer gives " + describe_counts(got) + ", expected " + describe_counts(expected));
      }
    }
  }
  const double determinate_share = static_cast<double>(determinate) / static_cast<double>(o.instances);
  r.stats = {{"instances", o.instances}, {"determinate", determinate},
             {"oracle_mismatches", oracle_mismatch}, {"sampled_mismatches", sampled_mismatch},
             {"negative_words", negative}, {"greedy_violations", greedy_violations},
             {"closed_form_max_error", closed_form_error}};
  r.passed = oracle_mismatch == 0 && sampled_mismatch == 0 && negative == 0 &&
             greedy_violations == 0 && closed_form_error <= 1e-9 && determinate_share >= 0.8;
  if (r.passed) {
    r.detail = std::to_string(o.instances) + " instances, " + std::to_string(determinate) +
               " with gaps above 3 standard errors, all matching";
  } else if (closed_form_error > 1e-9) {
    r.detail = "exact drops differ from the lambda*idf closed form by " + fmt(closed_form_error);
  } else if (!first_failure.empty()) {
    r.detail = first_failure;
  } else {
    r.detail = "only " + std::to_string(determinate) + " determinate instances";
  }
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_shortcut_models(const ShortcutOptions& o) {
  Stopwatch clock;
  CheckResult r;
  r.name = "shortcut";
  Rng rng(mix_seed(o.seed, 3));
  const double p = 0.5;
  std::size_t oracle_mismatch = 0, sampled_mismatch = 0, corner_failures = 0, capped = 0;
  std::string first_failure;
  auto fail = [&](std::size_t inst, const std::string& what) {
    if (first_failure.empty()) first_failure = "instance " + std::to_string(inst) + ": " + what;
  };
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    std::vector<std::string> shortcut;
    std::vector<std::size_t> m;
    TokenList tokens;
    do {
      shortcut.clear(), m.clear(), tokens.clear();
      const std::size_t k = 1 + rng.uniform_index(3);
      for (std::size_t j = 0; j < k; ++j) {
        shortcut.push_back(word("s", j));
        m.push_back(j == 0 ? 1 + rng.uniform_index(4) : m.back() + 1 + rng.uniform_index(2));
        tokens.insert(tokens.end(), m.back(), shortcut.back());
      }
      const std::size_t fillers = rng.uniform_index(4);
      for (std::size_t f = 0; f < fillers; ++f) tokens.push_back(word("f", f));
    } while (tokens.size() > 14);
    const int l_max = 1 + static_cast<int>(rng.uniform_index(6));
    shuffle(tokens, rng);
    const Document doc(tokens);
    const ShortcutModel model(shortcut);
    const std::size_t want = std::min<std::size_t>(m[0], static_cast<std::size_t>(l_max));
    const bool want_met = m[0] <= static_cast<std::size_t>(l_max);
    capped += want_met ? 0 : 1;
    const std::map<std::string, std::size_t> expected = {{shortcut[0], want}};
    const double epsilon = 0.9;

    const oracle::ExactDistribution dist(doc, model, p, 1);
    const auto exact = oracle::oracle_optimal_candidate(dist, epsilon, l_max);
    const auto exact_counts = oracle::word_counts(tokens, exact.positions);
    if (exact_counts != expected || exact.feasible != want_met) {
      ++oracle_mismatch;
      fail(inst, "oracle gives " + describe_counts(exact_counts) + ", expected " + describe_counts(expected));
    }

    explainer::ExplainConfig cfg;
    cfg.sampling.l_max = l_max;
    cfg.sampling.n_override = o.samples;
    cfg.sampling.seed = mix_seed(o.seed, 200 + inst);
    cfg.epsilon = epsilon;
    cfg.pool_size = doc.size();
    cfg.n_counterfactuals = 0;
    cfg.threads = 1;
    const auto e = explainer::explain(doc, model, cfg);
    const auto got = oracle::word_counts(tokens, e.subset_positions());
    if (got != expected || e.threshold_met != want_met) {
      ++sampled_mismatch;
      fail(inst, "explainer gives " + describe_counts(got) + ", expected " + describe_counts(expected));
    }

    for (std::size_t removals = 1; removals < m[0]; ++removals) {
      std::vector<std::size_t> corner(m.size(), 0);
      corner[0] = removals;
      if (oracle::best_shortcut_allocation(m, removals, p) != corner) {
        ++corner_failures;
        fail(inst, "best allocation of " + std::to_string(removals) + " removals is not on the rarest word");
      }
    }
  }
  r.stats = {{"instances", o.instances}, {"l_max_below_m1", capped},
             {"oracle_mismatches", oracle_mismatch}, {"sampled_mismatches", sampled_mismatch},
             {"corner_failures", corner_failures}};
  r.passed = oracle_mismatch == 0 && sampled_mismatch == 0 && corner_failures == 0;
  r.detail = r.passed ? std::to_string(o.instances) + " instances (" + std::to_string(capped) +
                            " with l_max < m_1), all matching"
                      : first_failure;
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_cross_oracle(const CrossOracleOptions& o) {
  Stopwatch clock;
  CheckResult r;
  r.name = "cross-oracle";
  Rng rng(mix_seed(o.seed, 4));
  const double p = 0.5;
  double linear_err = 0.0, shortcut_err = 0.0;
  std::size_t candidates_checked = 0;
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    auto li = random_linear(rng, o.max_positions, Link::kIdentity, 1.0);
    const oracle::ExactDistribution dist(li.doc, *li.model, p, 0);
    const auto& dict = li.doc.local_dictionary();
    std::vector<double> weights;
    for (const auto& t : dict) weights.push_back(li.weighted_idf.at(t));
    for (const auto& c : oracle::all_candidates(li.doc.size(), li.doc.size())) {
      const double closed = oracle::linear_drop_closed_form(weights, counts_for(dict, li.doc.tokens(), c), 1.0 - p);
      linear_err = std::max(linear_err, std::abs(closed - dist.candidate_drop(c)));
      ++candidates_checked;
    }
  }
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    auto si = random_shortcut(rng, o.max_positions);
    const oracle::ExactDistribution dist(si.doc, *si.model, p, 1);
    std::vector<std::size_t> m;
    for (const auto& w : si.shortcut) m.push_back(si.doc.multiplicity(w));
    for (const auto& c : oracle::all_candidates(si.doc.size(), si.doc.size())) {
      const double closed = oracle::shortcut_drop_closed_form(m, counts_for(si.shortcut, si.doc.tokens(), c), p);
      shortcut_err = std::max(shortcut_err, std::abs(closed - dist.candidate_drop(c)));
      ++candidates_checked;
    }
  }
  r.stats = {{"linear_max_error", linear_err}, {"shortcut_max_error", shortcut_err},
             {"candidates", candidates_checked}, {"tolerance", o.tolerance}};
  r.passed = linear_err <= o.tolerance && shortcut_err <= o.tolerance;
  r.detail = "max error linear " + fmt(linear_err) + ", shortcut " + fmt(shortcut_err) + " over " +
             std::to_string(candidates_checked) + " candidates";
  r.seconds = clock.seconds();
  return r;
}

CheckResult check_mask_equivalence(std::uint64_t seed, std::size_t instances) {
  Stopwatch clock;
  CheckResult r;
  r.name = "mask-equivalence";
  Rng rng(mix_seed(seed, 5));
  std::size_t vector_mismatches = 0;
  double oracle_err = 0.0;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const Link link = inst % 2 == 0 ? Link::kIdentity : Link::kLogistic;
    auto li = random_linear(rng, 10, link, 1.0);
    const auto& vec = li.model->vectorizer();
    const auto& tokens = li.doc.tokens();
    for (std::size_t trial = 0; trial < 20; ++trial) {
      TokenList masked = tokens, deleted;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (rng.bernoulli(0.5)) {
          masked[i] = "UNK";
        } else {
          deleted.push_back(tokens[i]);
        }
      }
      if (vec.vectorize(masked) != vec.vectorize(deleted)) ++vector_mismatches;
    }
    const std::size_t target = link == Link::kIdentity ? 0 : 1;
    const oracle::ExactDistribution by_mask(li.doc, *li.model, 0.5, target, oracle::Removal::kMask);
    const oracle::ExactDistribution by_delete(li.doc, *li.model, 0.5, target, oracle::Removal::kDelete);
    for (const auto& c : oracle::all_candidates(li.doc.size(), 3)) {
      oracle_err = std::max(oracle_err, std::abs(by_mask.candidate_drop(c) - by_delete.candidate_drop(c)));
    }
  }
  r.stats = {{"vector_mismatches", vector_mismatches}, {"oracle_max_difference", oracle_err}};
  r.passed = vector_mismatches == 0 && oracle_err <= 1e-12;
  r.detail = std::to_string(vector_mismatches) + " vector mismatches, oracle difference " + fmt(oracle_err);
  r.seconds = clock.seconds();
  return r;
}

std::vector<std::string> check_names() {
  return {"sample-size", "estimator", "coverage", "linear", "shortcut", "cross-oracle", "mask-equivalence"};
}

std::vector<CheckResult> run_checks(const std::vector<std::string>& names, std::uint64_t seed) {
  const auto all = check_names();
  for (const auto& n : names) {
    if (std::find(all.begin(), all.end(), n) == all.end()) {
      std::string list;
      for (const auto& a : all) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("unknown check '" + n + "' (available: " + list + ")");
    }
  }
  const auto& chosen = names.empty() ? all : names;
  std::vector<CheckResult> out;
  for (const auto& n : chosen) {
    if (n == "sample-size") {
      out.push_back(check_sample_size());
    } else if (n == "estimator") {
      EstimatorOptions o;
      o.seed = seed;
      out.push_back(check_estimator_consistency(o));
    } else if (n == "coverage") {
      CoverageOptions o;
      o.seed = seed;
      out.push_back(check_sample_coverage(o));
    } else if (n == "linear") {
      LinearOptions o;
      o.seed = seed;
      out.push_back(check_linear_models(o));
    } else if (n == "shortcut") {
      ShortcutOptions o;
      o.seed = seed;
      out.push_back(check_shortcut_models(o));
    } else if (n == "cross-oracle") {
      CrossOracleOptions o;
      o.seed = seed;
      out.push_back(check_cross_oracle(o));
    } else if (n == "mask-equivalence") {
      out.push_back(check_mask_equivalence(seed));
    }
  }
  return out;
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                 {"seconds", r.seconds}, {"stats", r.stats}});
  }
  return j;
}

}  // namespace fred::verify
