/* C interface to the FRED text explainer. */
#ifndef FRED_FRED_H
#define FRED_FRED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FRED_BUILDING_LIBRARY)
#    define FRED_API __declspec(dllexport)
#  else
#    define FRED_API __declspec(dllimport)
#  endif
#else
#  define FRED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fred_status {
  FRED_OK = 0,
  FRED_ERR_VERIFICATION = 1,
  FRED_ERR_CONFIG = 2,
  FRED_ERR_TRANSPORT = 3,
  FRED_ERR_INVALID_INPUT = 4,
  FRED_ERR_INTERNAL = 5
} fred_status;

typedef struct fred_model fred_model;
typedef struct fred_lexicon fred_lexicon;
typedef struct fred_explanation fred_explanation;

/* Message of the last failed call on this thread; never NULL. */
FRED_API const char* fred_last_error(void);

/* Frees strings returned through char** out-parameters. */
FRED_API void fred_string_free(char* s);

/* Built-in model file (kind "linear" or "shortcut"). vectorizer_path may be
   NULL. */
FRED_API fred_status fred_model_load(const char* path, const char* vectorizer_path,
                                     fred_model** out);
/* Remote endpoint. auth_header ("Name: value") may be NULL; max_batch_size 0
   sends each batch in one request. */
FRED_API fred_status fred_model_remote(const char* base_url, const char* auth_header,
                                       size_t max_batch_size, fred_model** out);
FRED_API void fred_model_free(fred_model* model);
/* Model outputs for each text, written to probabilities[i * n_classes + k].
   *n_classes receives the number of outputs per text. */
FRED_API fred_status fred_model_predict(const fred_model* model, const char* const* texts,
                                        size_t n_texts, double* probabilities,
                                        size_t capacity, size_t* n_classes);

FRED_API fred_status fred_lexicon_load(const char* path, fred_lexicon** out);
FRED_API void fred_lexicon_free(fred_lexicon* lexicon);

typedef enum fred_sampling { FRED_SAMPLING_MASK = 0, FRED_SAMPLING_POS = 1 } fred_sampling;

typedef struct fred_options {
  fred_sampling sampling;
  double p_perturb;
  double alpha;
  int l_max;
  size_t n_samples; /* 0 derives n from alpha, p_perturb and l_max */
  uint64_t seed;
  const char* mask_token;
  double epsilon;
  size_t pool_size;
  size_t n_counterfactuals;
  int target_class; /* negative selects the argmax class */
  unsigned threads; /* 0 uses every hardware thread */
} fred_options;

/* Fills the defaults: mask sampling, p 0.5, alpha 0.95, l_max 10, epsilon
   0.15, pool 20, 3 counterfactuals, mask token "UNK", seed 0. */
FRED_API void fred_options_init(fred_options* options);

/* lexicon may be NULL unless options->sampling is FRED_SAMPLING_POS. */
FRED_API fred_status fred_explain(const fred_model* model, const char* text,
                                  const fred_options* options, const fred_lexicon* lexicon,
                                  fred_explanation** out);
FRED_API void fred_explanation_free(fred_explanation* explanation);

typedef enum fred_format { FRED_FORMAT_JSON = 0, FRED_FORMAT_ANSI = 1, FRED_FORMAT_HTML = 2 } fred_format;

/* include_timing 0 writes wall_time_s as null, making output reproducible. */
FRED_API fred_status fred_explanation_render(const fred_explanation* explanation,
                                             fred_format format, int include_timing,
                                             char** out);

FRED_API size_t fred_explanation_token_count(const fred_explanation* explanation);
FRED_API size_t fred_explanation_subset_size(const fred_explanation* explanation);
/* Writes up to capacity subset positions (0-based); returns the subset size. */
FRED_API size_t fred_explanation_subset(const fred_explanation* explanation, size_t* positions,
                                        size_t capacity);
FRED_API int fred_explanation_threshold_met(const fred_explanation* explanation);
FRED_API double fred_explanation_subset_drop(const fred_explanation* explanation);
FRED_API double fred_explanation_mean_prediction(const fred_explanation* explanation);
/* Score of position i; NaN when the position was never perturbed. */
FRED_API double fred_explanation_score(const fred_explanation* explanation, size_t i);
FRED_API size_t fred_explanation_sample_count(const fred_explanation* explanation);

FRED_API fred_status fred_required_sample_size(double alpha, double p_perturb, int l_max,
                                               size_t* out);

/* Runs the named oracle checks (comma-separated, NULL or "" for all) and
   writes a JSON report. Returns FRED_ERR_VERIFICATION if any check fails. */
FRED_API fred_status fred_verify(const char* checks, uint64_t seed, char** report_json);

typedef struct fred_eval_options {
  size_t max_documents;
  int predicted_class; /* negative keeps every document */
  const char* label;   /* NULL keeps every label */
  int order_by_length;
  size_t robustness_runs;
  const char* metrics; /* comma-separated; NULL or "" for all */
  int random_baseline;
  const char* external_scores_path; /* NULL for none */
  unsigned threads;
} fred_eval_options;

FRED_API void fred_eval_options_init(fred_eval_options* options);

/* Evaluates explanations over a corpus file. report_json receives the JSON
   report and table (may be NULL) the aligned text table. */
FRED_API fred_status fred_evaluate(const fred_model* model, const char* corpus_path,
                                   const fred_options* options,
                                   const fred_eval_options* eval_options,
                                   const fred_lexicon* lexicon, char** report_json,
                                   char** table);

/* Replays a recorded fixture against a live endpoint. Returns
   FRED_ERR_VERIFICATION when any item fails. */
FRED_API fred_status fred_serve_check(const char* base_url, const char* fixture_path,
                                      const char* auth_header, char** report_json);

/* Fits a TF-IDF vectorizer on a corpus file and writes it as JSON. */
FRED_API fred_status fred_vectorizer_fit(const char* corpus_path, const char* out_path);

/* Tokenizes text and writes the tokens as a JSON array. */
FRED_API fred_status fred_tokenize(const char* text, char** tokens_json);

FRED_API const char* fred_version(void);

#ifdef __cplusplus
}
#endif

#endif /* FRED_FRED_H */
