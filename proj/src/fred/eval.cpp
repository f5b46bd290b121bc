#include "fred/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "fred/error.hpp"
#include "fred/rng.hpp"

namespace fred::eval {

TokenList mask_positions(const TokenList& tokens, std::span<const std::size_t> removed,
                         const std::string& mask_token) {
  TokenList out = tokens;
  for (auto p : removed) out.at(p) = mask_token;
  return out;
}

TokenList keep_positions(const TokenList& tokens, std::span<const std::size_t> kept,
                         const std::string& mask_token) {
  TokenList out(tokens.size(), mask_token);
  for (auto p : kept) out.at(p) = tokens.at(p);
  return out;
}

double comprehensiveness(const predictor::Predictor& model, const TokenList& xi,
                         std::span<const std::size_t> e, std::size_t target_class,
                         const std::string& mask_token) {
  const TokenList docs[] = {xi, mask_positions(xi, e, mask_token)};
  const auto preds = model.predict_batch(docs);
  return predictor::target_score(preds[0], target_class) -
         predictor::target_score(preds[1], target_class);
}

double sufficiency(const predictor::Predictor& model, const TokenList& xi,
                   std::span<const std::size_t> e, std::size_t target_class,
                   const std::string& mask_token) {
  const TokenList docs[] = {xi, keep_positions(xi, e, mask_token)};
  const auto preds = model.predict_batch(docs);
  return predictor::target_score(preds[0], target_class) -
         predictor::target_score(preds[1], target_class);
}

std::vector<std::size_t> positive_ranking(std::span<const std::optional<double>> scores) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] && *scores[i] > 0.0) out.push_back(i);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](std::size_t a, std::size_t b) { return *scores[a] > *scores[b]; });
  return out;
}

std::vector<std::size_t> top_k(std::span<const std::optional<double>> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].has_value() != scores[b].has_value()) return scores[a].has_value();
    return scores[a] && *scores[a] > *scores[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

std::optional<double> auc_morf(const predictor::Predictor& model, const TokenList& xi,
                               std::span<const std::optional<double>> scores,
                               std::size_t target_class, const std::string& mask_token,
                               std::size_t max_depth) {
  if (scores.size() != xi.size()) throw InvalidInputError("score vector length differs from document length");
  const auto ranking = positive_ranking(scores);
  if (ranking.size() < 2) return std::nullopt;
  const std::size_t depth = std::min(max_depth, ranking.size());
  std::vector<TokenList> docs;
  docs.reserve(depth);
  TokenList y = xi;
  for (std::size_t k = 0; k < depth; ++k) {
    y[ranking[k]] = mask_token;
    docs.push_back(y);
  }
  const auto preds = model.predict_batch(docs);
  double sum = 0.0;
  for (std::size_t k = 1; k < depth; ++k) {
    sum += (predictor::target_score(preds[k - 1], target_class) +
            predictor::target_score(preds[k], target_class)) / 2.0;
  }
  return sum / static_cast<double>(depth);
}

double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::set<std::size_t> sa(a.begin(), a.end());
  std::set<std::size_t> sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (auto x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double robustness(std::span<const std::size_t> reference,
                  std::span<const std::vector<std::size_t>> others) {
  if (others.empty()) throw ConfigError("robustness needs at least one repeated run");
  double sum = 0.0;
  for (const auto& o : others) sum += jaccard(reference, o);
  return sum / static_cast<double>(others.size());
}

double robustness(const SubsetRun& explain, std::uint64_t seed, std::size_t k) {
  if (k == 0) throw ConfigError("robustness needs k >= 1");
  const auto reference = explain(seed);
  std::vector<std::vector<std::size_t>> others;
  for (std::size_t r = 0; r < k; ++r) others.push_back(explain(mix_seed(seed, r + 1)));
  return robustness(reference, others);
}

double proportion(std::size_t b, std::size_t subset_size) {
  if (b == 0) throw InvalidInputError("proportion of an empty document");
  return static_cast<double>(subset_size) / static_cast<double>(b);
}

std::string metric_key(Metric m) {
  switch (m) {
    case Metric::kSufficiency: return "sufficiency";
    case Metric::kComprehensiveness: return "comprehensiveness";
    case Metric::kRobustness: return "robustness";
    case Metric::kAucMorf: return "aucmorf";
    case Metric::kTime: return "time_s";
    case Metric::kProportion: return "proportion";
  }
  return "";
}

std::string metric_header(Metric m) {
  switch (m) {
    case Metric::kSufficiency: return "suffic.";
    case Metric::kComprehensiveness: return "compreh.";
    case Metric::kRobustness: return "robust.";
    case Metric::kAucMorf: return "aucmorf";
    case Metric::kTime: return "time (s)";
    case Metric::kProportion: return "proport.";
  }
  return "";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (name == metric_key(m) || name == metric_header(m)) return m;
  }
  if (name == "time") return Metric::kTime;
  throw ConfigError("unknown metric '" + std::string(name) +
                    "' (expected sufficiency, comprehensiveness, robustness, aucmorf, time, proportion)");
}

std::vector<Metric> parse_metric_list(std::string_view list) {
  std::set<Metric> chosen;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    auto item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) chosen.insert(parse_metric(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::vector<Metric> out;
  for (Metric m : kAllMetrics) {
    if (chosen.empty() || chosen.count(m)) out.push_back(m);
  }
  return out;
}

void SummaryBuilder::add(double x) {
  ++count_;
  sum_ += x;
  sum_sq_ += x * x;
}

void SummaryBuilder::merge(const SummaryBuilder& other) {
  count_ += other.count_;
  sum_ += other.sum_;
  sum_sq_ += other.sum_sq_;
}

Summary SummaryBuilder::summary() const {
  Summary s;
  s.count = count_;
  if (count_ == 0) return s;
  const double n = static_cast<double>(count_);
  s.mean = sum_ / n;
  s.std = std::sqrt(std::max(0.0, sum_sq_ / n - s.mean * s.mean));
  return s;
}

std::optional<double> DocumentMetrics::value(Metric m) const {
  switch (m) {
    case Metric::kSufficiency: return sufficiency;
    case Metric::kComprehensiveness: return comprehensiveness;
    case Metric::kRobustness: return robustness;
    case Metric::kAucMorf: return auc_morf;
    case Metric::kTime: return time_s;
    case Metric::kProportion: return proportion;
  }
  return std::nullopt;
}

Summary MethodReport::summary(Metric m) const {
  SummaryBuilder b;
  for (const auto& d : documents) {
    if (auto v = d.value(m)) b.add(*v);
  }
  return b.summary();
}

std::vector<ExternalScores> load_external_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open score file: " + path);
  std::vector<ExternalScores> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto method = j.at("method").get<std::string>();
      const auto index = j.at("index").get<std::size_t>();
      std::vector<std::optional<double>> scores;
      for (const auto& v : j.at("scores")) {
        scores.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      }
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const auto& e) { return e.method == method; });
      if (it == out.end()) {
        out.push_back({method, {}});
        it = std::prev(out.end());
      }
      it->scores[index] = std::move(scores);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> select_documents(const text::Corpus& corpus,
                                          const predictor::Predictor& model,
                                          const EvalConfig& config) {
  const auto& docs = corpus.documents();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].document.empty()) continue;
    if (config.label && docs[i].label != config.label) continue;
    candidates.push_back(i);
  }
  if (config.predicted_class) {
    std::vector<TokenList> batch;
    for (auto i : candidates) batch.push_back(docs[i].document.tokens());
    const auto preds = model.predict_batch(batch);
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (predictor::argmax(preds[k]) == *config.predicted_class) kept.push_back(candidates[k]);
    }
    candidates = std::move(kept);
  }
  if (config.order_by_length) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      return docs[a].document.size() < docs[b].document.size();
    });
  }
  if (candidates.size() > config.max_documents) candidates.resize(config.max_documents);
  return candidates;
}

namespace {

bool wants(const EvalConfig& config, Metric m) {
  return std::find(config.metrics.begin(), config.metrics.end(), m) != config.metrics.end();
}

std::vector<std::optional<double>> random_scores(std::size_t b, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::optional<double>> scores(b);
  for (auto& s : scores) s = 1.0 - rng.uniform01();
  return scores;
}

// Metrics shared by every method once its subset and scores are known.
void fill_subset_metrics(DocumentMetrics& m, const EvalConfig& config,
                         const predictor::Predictor& model, const TokenList& xi,
                         std::span<const std::optional<double>> scores, std::size_t target,
                         const std::string& mask) {
  if (wants(config, Metric::kSufficiency)) m.sufficiency = sufficiency(model, xi, m.subset, target, mask);
  if (wants(config, Metric::kComprehensiveness)) {
    m.comprehensiveness = comprehensiveness(model, xi, m.subset, target, mask);
  }
  if (wants(config, Metric::kAucMorf)) m.auc_morf = auc_morf(model, xi, scores, target, mask);
  if (wants(config, Metric::kProportion)) m.proportion = proportion(xi.size(), m.subset.size());
}

struct DocumentResult {
  std::vector<DocumentMetrics> per_method;
};

DocumentResult evaluate_document(const text::Corpus& corpus, std::size_t index,
                                 const predictor::Predictor& model, const EvalConfig& config,
                                 const sampling::PosLexicon* lexicon) {
  const auto& doc = corpus.documents()[index].document;
  const auto& xi = doc.tokens();
  auto explain_cfg = config.explain;
  const std::uint64_t seed = explain_cfg.sampling.seed;

  DocumentResult result;
  const auto e = explainer::explain(doc, model, explain_cfg, lexicon);
  const std::size_t target = e.target_class;
  const std::string& mask = e.config.sampling.mask_token;

  DocumentMetrics fred;
  fred.document_index = index;
  fred.length = xi.size();
  fred.subset = e.subset_positions();
  fill_subset_metrics(fred, config, model, xi, e.token_scores, target, mask);
  if (wants(config, Metric::kTime)) fred.time_s = e.wall_time_s;
  if (wants(config, Metric::kRobustness) && config.robustness_runs > 0) {
    std::vector<std::vector<std::size_t>> others;
    for (std::size_t r = 0; r < config.robustness_runs; ++r) {
      auto cfg = explain_cfg;
      cfg.sampling.seed = mix_seed(seed, r + 1);
      others.push_back(explainer::explain(doc, model, cfg, lexicon).subset_positions());
    }
    fred.robustness = robustness(fred.subset, others);
  }
  const std::size_t k = fred.subset.size();
  result.per_method.push_back(fred);

  if (config.random_baseline) {
    DocumentMetrics rnd;
    rnd.document_index = index;
    rnd.length = xi.size();
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t base = mix_seed(seed ^ 0x52414e444f4dULL, index);
    const auto scores = random_scores(xi.size(), base);
    rnd.subset = top_k(scores, k);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fill_subset_metrics(rnd, config, model, xi, scores, target, mask);
    if (wants(config, Metric::kTime)) rnd.time_s = elapsed;
    if (wants(config, Metric::kRobustness) && config.robustness_runs > 0) {
      std::vector<std::vector<std::size_t>> others;
      for (std::size_t r = 0; r < config.robustness_runs; ++r) {
        others.push_back(top_k(random_scores(xi.size(), mix_seed(base, r + 1)), k));
      }
      rnd.robustness = robustness(rnd.subset, others);
    }
    result.per_method.push_back(std::move(rnd));
  }

  for (const auto& ext : config.external) {
    DocumentMetrics m;
    m.document_index = index;
    m.length = xi.size();
    auto it = ext.scores.find(index);
    if (it != ext.scores.end()) {
      if (it->second.size() != xi.size()) {
        throw InvalidInputError("scores for document " + std::to_string(index) + " from '" +
                                ext.method + "' have the wrong length");
      }
      m.subset = top_k(it->second, k);
      fill_subset_metrics(m, config, model, xi, it->second, target, mask);
    }
    result.per_method.push_back(std::move(m));
  }
  return result;
}

std::string format_cell(const Summary& s) {
  if (s.count == 0) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", s.mean, s.std);
  return buf;
}

// Display width of a UTF-8 string, counting code points.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

}  // namespace

EvalReport evaluate_corpus(const text::Corpus& corpus, const predictor::Predictor& model,
                           const EvalConfig& config, const sampling::PosLexicon* lexicon) {
  if (config.metrics.empty()) throw ConfigError("no metrics selected");
  EvalReport report;
  report.metrics = config.metrics;
  report.document_indices = select_documents(corpus, model, config);
  if (report.document_indices.empty()) throw InvalidInputError("no documents match the selector");

  const std::size_t n_docs = report.document_indices.size();
  std::vector<DocumentResult> results(n_docs);
  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : config.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_docs));
  EvalConfig per_doc = config;
  // Parallelism goes to documents; each explanation searches single-threaded.
  if (threads > 1) per_doc.explain.threads = 1;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < n_docs; k = next++) {
      try {
        results[k] = evaluate_document(corpus, report.document_indices[k], model, per_doc, lexicon);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_docs;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> names = {"fred"};
  if (config.random_baseline) names.push_back("random");
  for (const auto& ext : config.external) names.push_back(ext.method);
  for (std::size_t m = 0; m < names.size(); ++m) {
    MethodReport method{names[m], {}};
    for (auto& r : results) method.documents.push_back(std::move(r.per_method[m]));
    report.methods.push_back(std::move(method));
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
  };
  nlohmann::json j;
  j["documents"] = document_indices;
  j["metrics"] = nlohmann::json::array();
  for (Metric m : metrics) j["metrics"].push_back(metric_key(m));
  j["methods"] = nlohmann::json::array();
  for (const auto& method : methods) {
    nlohmann::json mj = {{"name", method.name}};
    for (Metric m : metrics) {
      const auto s = method.summary(m);
      mj["summary"][metric_key(m)] = {{"mean", s.count ? nlohmann::json(s.mean) : nlohmann::json()},
                                      {"std", s.count ? nlohmann::json(s.std) : nlohmann::json()},
                                      {"count", s.count}};
    }
    mj["documents"] = nlohmann::json::array();
    for (const auto& d : method.documents) {
      nlohmann::json dj = {{"index", d.document_index}, {"length", d.length}, {"subset", d.subset}};
      for (Metric m : metrics) dj[metric_key(m)] = opt(d.value(m));
      mj["documents"].push_back(std::move(dj));
    }
    j["methods"].push_back(std::move(mj));
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"method"};
  for (Metric m : metrics) header.push_back(metric_header(m));
  rows.push_back(header);
  for (const auto& method : methods) {
    std::vector<std::string> row = {method.name};
    for (Metric m : metrics) row.push_back(format_cell(method.summary(m)));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) out += std::string(width[c] - display_width(row[c]) + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace fred::eval
