#include "fred/fred.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "fred/error.hpp"
#include "fred/eval.hpp"
#include "fred/explainer.hpp"
#include "fred/predictor.hpp"
#include "fred/remote.hpp"
#include "fred/render.hpp"
#include "fred/sampling.hpp"
#include "fred/text.hpp"
#include "fred/verify.hpp"

struct fred_model {
  std::unique_ptr<fred::predictor::Predictor> impl;
};

struct fred_lexicon {
  fred::sampling::PosLexicon impl;
};

struct fred_explanation {
  fred::explainer::Explanation impl;
};

namespace {

thread_local std::string last_error;

fred_status status_of(fred::ErrorKind kind) {
  switch (kind) {
    case fred::ErrorKind::kConfig: return FRED_ERR_CONFIG;
    case fred::ErrorKind::kInvalidInput: return FRED_ERR_INVALID_INPUT;
    case fred::ErrorKind::kTransport: return FRED_ERR_TRANSPORT;
    case fred::ErrorKind::kVerification: return FRED_ERR_VERIFICATION;
    case fred::ErrorKind::kInternal: return FRED_ERR_INTERNAL;
  }
  return FRED_ERR_INTERNAL;
}

fred_status fail(fred_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
fred_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const fred::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FRED_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FRED_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FRED_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fred_status require(const void* p, const char* what) {
  if (p) return FRED_OK;
  return fail(FRED_ERR_INVALID_INPUT, std::string(what) + " must not be NULL");
}

fred::explainer::ExplainConfig to_config(const fred_options& o) {
  fred::explainer::ExplainConfig cfg;
  cfg.sampling.scheme =
      o.sampling == FRED_SAMPLING_POS ? fred::sampling::Scheme::kPos : fred::sampling::Scheme::kMask;
  if (o.sampling != FRED_SAMPLING_POS && o.sampling != FRED_SAMPLING_MASK) {
    throw fred::ConfigError("unknown sampling scheme");
  }
  cfg.sampling.p_perturb = o.p_perturb;
  cfg.sampling.alpha = o.alpha;
  cfg.sampling.l_max = o.l_max;
  if (o.n_samples > 0) cfg.sampling.n_override = o.n_samples;
  cfg.sampling.seed = o.seed;
  cfg.sampling.mask_token = o.mask_token ? o.mask_token : "UNK";
  cfg.epsilon = o.epsilon;
  cfg.pool_size = o.pool_size;
  cfg.n_counterfactuals = o.n_counterfactuals;
  if (o.target_class >= 0) cfg.target_class = static_cast<std::size_t>(o.target_class);
  cfg.threads = o.threads;
  return cfg;
}

}  // namespace

extern "C" {

const char* fred_last_error(void) { return last_error.c_str(); }

void fred_string_free(char* s) { std::free(s); }

const char* fred_version(void) { return "0.1.0"; }

fred_status fred_model_load(const char* path, const char* vectorizer_path, fred_model** out) {
  if (auto s = require(path, "path"); s != FRED_OK) return s;
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    std::optional<std::string> vec;
    if (vectorizer_path) vec = vectorizer_path;
    auto m = std::make_unique<fred_model>();
    m->impl = fred::predictor::load_model_file(path, vec);
    *out = m.release();
    return FRED_OK;
  });
}

fred_status fred_model_remote(const char* base_url, const char* auth_header,
                              size_t max_batch_size, fred_model** out) {
  if (auto s = require(base_url, "base_url"); s != FRED_OK) return s;
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    std::optional<std::string> auth;
    if (auth_header && *auth_header) auth = auth_header;
    auto m = std::make_unique<fred_model>();
    m->impl = std::make_unique<fred::predictor::RemoteModel>(base_url, auth, max_batch_size);
    *out = m.release();
    return FRED_OK;
  });
}

void fred_model_free(fred_model* model) { delete model; }

fred_status fred_model_predict(const fred_model* model, const char* const* texts, size_t n_texts,
                               double* probabilities, size_t capacity, size_t* n_classes) {
  if (auto s = require(model, "model"); s != FRED_OK) return s;
  if (n_texts > 0) {
    if (auto s = require(texts, "texts"); s != FRED_OK) return s;
  }
  if (auto s = require(n_classes, "n_classes"); s != FRED_OK) return s;
  return guarded([&] {
    std::vector<fred::text::TokenList> docs;
    for (size_t i = 0; i < n_texts; ++i) {
      if (!texts[i]) return fail(FRED_ERR_INVALID_INPUT, "texts[" + std::to_string(i) + "] is NULL");
      docs.push_back(fred::text::tokenize(texts[i]).tokens());
    }
    const auto preds = model->impl->predict_batch(docs);
    *n_classes = preds.empty() ? 0 : preds.front().values.size();
    if (preds.size() * *n_classes > capacity) {
      return fail(FRED_ERR_INVALID_INPUT, "output buffer holds " + std::to_string(capacity) +
                                              " values, " + std::to_string(preds.size() * *n_classes) +
                                              " needed");
    }
    for (size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].values.size() != *n_classes) {
        return fail(FRED_ERR_INTERNAL, "model returned rows of different widths");
      }
      for (size_t k = 0; k < *n_classes; ++k) probabilities[i * *n_classes + k] = preds[i].values[k];
    }
    return FRED_OK;
  });
}

fred_status fred_lexicon_load(const char* path, fred_lexicon** out) {
  if (auto s = require(path, "path"); s != FRED_OK) return s;
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    auto lex = std::make_unique<fred_lexicon>();
    lex->impl = fred::sampling::PosLexicon::load(path);
    *out = lex.release();
    return FRED_OK;
  });
}

void fred_lexicon_free(fred_lexicon* lexicon) { delete lexicon; }

void fred_options_init(fred_options* o) {
  if (!o) return;
  o->sampling = FRED_SAMPLING_MASK;
  o->p_perturb = 0.5;
  o->alpha = 0.95;
  o->l_max = 10;
  o->n_samples = 0;
  o->seed = 0;
  o->mask_token = "UNK";
  o->epsilon = 0.15;
  o->pool_size = 20;
  o->n_counterfactuals = 3;
  o->target_class = -1;
  o->threads = 0;
}

fred_status fred_explain(const fred_model* model, const char* text, const fred_options* options,
                         const fred_lexicon* lexicon, fred_explanation** out) {
  if (auto s = require(model, "model"); s != FRED_OK) return s;
  if (auto s = require(text, "text"); s != FRED_OK) return s;
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    fred_options defaults;
    fred_options_init(&defaults);
    const auto cfg = to_config(options ? *options : defaults);
    const auto doc = fred::text::tokenize(text);
    auto e = std::make_unique<fred_explanation>();
    e->impl = fred::explainer::explain(doc, *model->impl, cfg, lexicon ? &lexicon->impl : nullptr);
    *out = e.release();
    return FRED_OK;
  });
}

void fred_explanation_free(fred_explanation* explanation) { delete explanation; }

fred_status fred_explanation_render(const fred_explanation* e, fred_format format,
                                    int include_timing, char** out) {
  if (auto s = require(e, "explanation"); s != FRED_OK) return s;
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    std::string text;
    switch (format) {
      case FRED_FORMAT_JSON:
        text = fred::explainer::to_json(e->impl, include_timing != 0).dump(2) + "\n";
        break;
      case FRED_FORMAT_ANSI: text = fred::render::ansi(e->impl); break;
      case FRED_FORMAT_HTML: text = fred::render::html(e->impl); break;
      default: return fail(FRED_ERR_CONFIG, "unknown output format");
    }
    *out = copy_string(text);
    return FRED_OK;
  });
}

size_t fred_explanation_token_count(const fred_explanation* e) {
  return e ? e->impl.tokens.size() : 0;
}

size_t fred_explanation_subset_size(const fred_explanation* e) {
  return e ? e->impl.subset_positions().size() : 0;
}

size_t fred_explanation_subset(const fred_explanation* e, size_t* positions, size_t capacity) {
  if (!e) return 0;
  const auto subset = e->impl.subset_positions();
  for (size_t i = 0; i < subset.size() && i < capacity && positions; ++i) positions[i] = subset[i];
  return subset.size();
}

int fred_explanation_threshold_met(const fred_explanation* e) {
  return e && e->impl.threshold_met ? 1 : 0;
}

double fred_explanation_subset_drop(const fred_explanation* e) {
  if (!e || !e->impl.minimal_subset) return std::numeric_limits<double>::quiet_NaN();
  return e->impl.minimal_subset->drop;
}

double fred_explanation_mean_prediction(const fred_explanation* e) {
  return e ? e->impl.mean_prediction : std::numeric_limits<double>::quiet_NaN();
}

double fred_explanation_score(const fred_explanation* e, size_t i) {
  if (!e || i >= e->impl.token_scores.size() || !e->impl.token_scores[i]) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return *e->impl.token_scores[i];
}

size_t fred_explanation_sample_count(const fred_explanation* e) {
  return e ? e->impl.sample_count : 0;
}

fred_status fred_required_sample_size(double alpha, double p_perturb, int l_max, size_t* out) {
  if (auto s = require(out, "out"); s != FRED_OK) return s;
  return guarded([&] {
    *out = fred::sampling::required_sample_size(alpha, p_perturb, l_max);
    return FRED_OK;
  });
}

fred_status fred_verify(const char* checks, uint64_t seed, char** report_json) {
  if (auto s = require(report_json, "report_json"); s != FRED_OK) return s;
  return guarded([&] {
    std::vector<std::string> names;
    if (checks) {
      std::string list = checks;
      std::size_t start = 0;
      while (start <= list.size()) {
        const auto comma = list.find(',', start);
        auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) names.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    const auto results = fred::verify::run_checks(names, seed);
    *report_json = copy_string(fred::verify::to_json(results).dump(2) + "\n");
    for (const auto& r : results) {
      if (!r.passed) return fail(FRED_ERR_VERIFICATION, "check '" + r.name + "' failed: " + r.detail);
    }
    return FRED_OK;
  });
}

void fred_eval_options_init(fred_eval_options* o) {
  if (!o) return;
  o->max_documents = 100;
  o->predicted_class = -1;
  o->label = nullptr;
  o->order_by_length = 1;
  o->robustness_runs = 10;
  o->metrics = nullptr;
  o->random_baseline = 1;
  o->external_scores_path = nullptr;
  o->threads = 0;
}

fred_status fred_evaluate(const fred_model* model, const char* corpus_path,
                          const fred_options* options, const fred_eval_options* eval_options,
                          const fred_lexicon* lexicon, char** report_json, char** table) {
  if (auto s = require(model, "model"); s != FRED_OK) return s;
  if (auto s = require(corpus_path, "corpus_path"); s != FRED_OK) return s;
  return guarded([&] {
    fred_options defaults;
    fred_options_init(&defaults);
    fred_eval_options eval_defaults;
    fred_eval_options_init(&eval_defaults);
    const auto& eo = eval_options ? *eval_options : eval_defaults;

    fred::eval::EvalConfig cfg;
    cfg.explain = to_config(options ? *options : defaults);
    cfg.max_documents = eo.max_documents;
    if (eo.predicted_class >= 0) cfg.predicted_class = static_cast<std::size_t>(eo.predicted_class);
    if (eo.label) cfg.label = eo.label;
    cfg.order_by_length = eo.order_by_length != 0;
    cfg.robustness_runs = eo.robustness_runs;
    cfg.metrics = fred::eval::parse_metric_list(eo.metrics ? eo.metrics : "");
    cfg.random_baseline = eo.random_baseline != 0;
    if (eo.external_scores_path) cfg.external = fred::eval::load_external_scores(eo.external_scores_path);
    cfg.threads = eo.threads;

    const auto corpus = fred::text::Corpus::load(corpus_path);
    const auto report =
        fred::eval::evaluate_corpus(corpus, *model->impl, cfg, lexicon ? &lexicon->impl : nullptr);
    if (report_json) *report_json = copy_string(report.to_json().dump(2) + "\n");
    if (table) *table = copy_string(report.to_table());
    return FRED_OK;
  });
}

fred_status fred_serve_check(const char* base_url, const char* fixture_path,
                             const char* auth_header, char** report_json) {
  if (auto s = require(base_url, "base_url"); s != FRED_OK) return s;
  if (auto s = require(fixture_path, "fixture_path"); s != FRED_OK) return s;
  if (auto s = require(report_json, "report_json"); s != FRED_OK) return s;
  return guarded([&] {
    std::optional<std::string> auth;
    if (auth_header && *auth_header) auth = auth_header;
    const auto report = fred::predictor::serve_check(base_url, fixture_path, auth);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& item : report.items) {
      j.push_back({{"name", item.name}, {"passed", item.passed}, {"detail", item.detail}});
    }
    *report_json = copy_string(j.dump(2) + "\n");
    if (!report.passed()) {
      for (const auto& item : report.items) {
        if (!item.passed) return fail(FRED_ERR_VERIFICATION, "serve-check '" + item.name + "' failed: " + item.detail);
      }
    }
    return FRED_OK;
  });
}

fred_status fred_vectorizer_fit(const char* corpus_path, const char* out_path) {
  if (auto s = require(corpus_path, "corpus_path"); s != FRED_OK) return s;
  if (auto s = require(out_path, "out_path"); s != FRED_OK) return s;
  return guarded([&] {
    const auto corpus = fred::text::Corpus::load(corpus_path);
    fred::text::TfIdfVectorizer::fit(corpus).save(out_path);
    return FRED_OK;
  });
}

fred_status fred_tokenize(const char* text, char** tokens_json) {
  if (auto s = require(text, "text"); s != FRED_OK) return s;
  if (auto s = require(tokens_json, "tokens_json"); s != FRED_OK) return s;
  return guarded([&] {
    *tokens_json = copy_string(nlohmann::json(fred::text::tokenize(text).tokens()).dump());
    return FRED_OK;
  });
}

}  // extern "C"
