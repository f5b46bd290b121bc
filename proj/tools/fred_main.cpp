// Command-line front end over the C API in libfred.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fred/fred.h"
#include "json.hpp"

namespace {

constexpr const char* kAuthEnv = "FRED_AUTH_HEADER";

int exit_code(fred_status s) {
  switch (s) {
    case FRED_OK: return 0;
    case FRED_ERR_VERIFICATION: return 1;
    case FRED_ERR_CONFIG: return 2;
    case FRED_ERR_INVALID_INPUT: return 2;
    case FRED_ERR_TRANSPORT: return 3;
    case FRED_ERR_INTERNAL: return 1;
  }
  return 1;
}

const char* kind_name(fred_status s) {
  switch (s) {
    case FRED_OK: return "ok";
    case FRED_ERR_VERIFICATION: return "verification";
    case FRED_ERR_CONFIG: return "config";
    case FRED_ERR_INVALID_INPUT: return "invalid_input";
    case FRED_ERR_TRANSPORT: return "transport";
    case FRED_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

int report_error(fred_status s, const std::string& message) {
  const nlohmann::json j = {{"error", kind_name(s)}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return exit_code(s);
}

int report_error(fred_status s) { return report_error(s, fred_last_error()); }

struct Owned {
  char* p = nullptr;
  ~Owned() { fred_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ModelDeleter {
  void operator()(fred_model* m) const { fred_model_free(m); }
};
struct LexiconDeleter {
  void operator()(fred_lexicon* l) const { fred_lexicon_free(l); }
};
using ModelPtr = std::unique_ptr<fred_model, ModelDeleter>;
using LexiconPtr = std::unique_ptr<fred_lexicon, LexiconDeleter>;

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return static_cast<bool>(out);
}

std::optional<std::string> auth_header() {
  if (const char* v = std::getenv(kAuthEnv); v && *v) return std::string(v);
  return std::nullopt;
}

struct ModelArgs {
  std::string model_path;
  std::string vectorizer_path;
  std::string url;
  std::size_t max_batch = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Built-in model file (JSON)");
    cmd->add_option("--vectorizer", vectorizer_path, "Vectorizer for linear models without one");
    cmd->add_option("--url", url, "Base URL of a remote model endpoint");
    cmd->add_option("--max-batch", max_batch, "Texts per remote request (0 = one request)");
  }

  fred_status open(ModelPtr& out) const {
    fred_model* m = nullptr;
    fred_status s;
    if (!url.empty()) {
      const auto auth = auth_header();
      s = fred_model_remote(url.c_str(), auth ? auth->c_str() : nullptr, max_batch, &m);
    } else if (!model_path.empty()) {
      s = fred_model_load(model_path.c_str(), vectorizer_path.empty() ? nullptr : vectorizer_path.c_str(), &m);
    } else {
      return FRED_ERR_CONFIG;
    }
    out.reset(m);
    return s;
  }

  std::string selection_error() const {
    if (!model_path.empty() && !url.empty()) return "pass either --model or --url, not both";
    return "one of --model or --url is required";
  }
  bool selected() const { return model_path.empty() != url.empty(); }
};

struct ExplainArgs {
  std::string sampling = "mask";
  double p = 0.5;
  double alpha = 0.95;
  int l_max = 10;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string mask_token = "UNK";
  std::string lexicon;
  double epsilon = 0.15;
  std::size_t pool_size = 20;
  std::size_t k = 3;
  int target_class = -1;
  unsigned threads = 0;

  void add(CLI::App* cmd, bool with_counterfactuals) {
    cmd->add_option("--sampling", sampling, "Perturbation scheme")
        ->check(CLI::IsMember({"mask", "pos"}))
        ->capture_default_str();
    cmd->add_option("--p", p, "Probability that a token is perturbed")->capture_default_str();
    cmd->add_option("--alpha", alpha, "Coverage confidence for the sample size")->capture_default_str();
    cmd->add_option("--l-max", l_max, "Largest candidate size")->capture_default_str();
    cmd->add_option("--n", n, "Explicit sample count (default: derived from --alpha, --p, --l-max)");
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--mask-token", mask_token, "Token that replaces removed words")->capture_default_str();
    cmd->add_option("--lexicon", lexicon, "POS/sentiment lexicon (TSV), required by --sampling pos");
    cmd->add_option("--epsilon", epsilon, "Required drop as a fraction of the mean prediction")
        ->capture_default_str();
    cmd->add_option("--pool-size", pool_size, "Positions considered for candidates of size >= 2")
        ->capture_default_str();
    if (with_counterfactuals) {
      cmd->add_option("--k", k, "Number of counterfactuals")->capture_default_str();
    }
    cmd->add_option("--target-class", target_class, "Class to explain (default: predicted class)");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  fred_options options() const {
    fred_options o;
    fred_options_init(&o);
    o.sampling = sampling == "pos" ? FRED_SAMPLING_POS : FRED_SAMPLING_MASK;
    o.p_perturb = p;
    o.alpha = alpha;
    o.l_max = l_max;
    o.n_samples = n;
    o.seed = seed;
    o.mask_token = mask_token.c_str();
    o.epsilon = epsilon;
    o.pool_size = pool_size;
    o.n_counterfactuals = k;
    o.target_class = target_class;
    o.threads = threads;
    return o;
  }

  // Loads the lexicon when given; pos sampling without one is a config error.
  fred_status open_lexicon(LexiconPtr& out, std::string& message) const {
    if (sampling == "pos" && lexicon.empty()) {
      message = "--sampling pos requires --lexicon PATH";
      return FRED_ERR_CONFIG;
    }
    if (lexicon.empty()) return FRED_OK;
    fred_lexicon* l = nullptr;
    const fred_status s = fred_lexicon_load(lexicon.c_str(), &l);
    out.reset(l);
    if (s != FRED_OK) message = fred_last_error();
    return s;
  }
};

std::optional<std::string> read_text(const std::string& inline_text, const std::string& file) {
  if (!file.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), {});
  }
  return inline_text;
}

int run_explain(const ModelArgs& model_args, const ExplainArgs& args, const std::string& text_arg,
                const std::string& text_file, const std::string& output, const std::string& out_path,
                const std::string& json_out, bool no_timing) {
  if (text_arg.empty() == text_file.empty()) {
    return report_error(FRED_ERR_CONFIG, "pass the text inline (--text or positional) or with --file, exactly once");
  }
  const auto text = read_text(text_arg, text_file);
  if (!text) return report_error(FRED_ERR_CONFIG, "cannot read --file " + text_file);

  LexiconPtr lexicon;
  std::string message;
  if (auto s = args.open_lexicon(lexicon, message); s != FRED_OK) return report_error(s, message);
  if (!model_args.selected()) return report_error(FRED_ERR_CONFIG, model_args.selection_error());
  ModelPtr model;
  if (auto s = model_args.open(model); s != FRED_OK) return report_error(s);

  const auto options = args.options();
  fred_explanation* raw = nullptr;
  if (auto s = fred_explain(model.get(), text->c_str(), &options, lexicon.get(), &raw); s != FRED_OK) {
    return report_error(s);
  }
  std::unique_ptr<fred_explanation, void (*)(fred_explanation*)> e(raw, fred_explanation_free);

  const fred_format format = output == "ansi" ? FRED_FORMAT_ANSI
                             : output == "html" ? FRED_FORMAT_HTML
                                                : FRED_FORMAT_JSON;
  Owned rendered;
  if (auto s = fred_explanation_render(e.get(), format, no_timing ? 0 : 1, &rendered.p); s != FRED_OK) {
    return report_error(s);
  }
  if (out_path.empty()) {
    std::cout << rendered.str();
  } else if (!write_file(out_path, rendered.str())) {
    return report_error(FRED_ERR_CONFIG, "cannot write --out " + out_path);
  }
  if (!json_out.empty()) {
    Owned json;
    if (auto s = fred_explanation_render(e.get(), FRED_FORMAT_JSON, no_timing ? 0 : 1, &json.p); s != FRED_OK) {
      return report_error(s);
    }
    if (!write_file(json_out, json.str())) return report_error(FRED_ERR_CONFIG, "cannot write --json-out " + json_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FRED: explain text classifier predictions by the minimal subset of words whose "
               "removal drops the model's confidence"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fred_version()));

  // explain
  auto* explain = app.add_subcommand("explain", "Explain one prediction");
  ModelArgs explain_model;
  ExplainArgs explain_args;
  std::string text_arg, text_file, output = "json", out_path, json_out;
  bool no_timing = false;
  explain_model.add(explain);
  explain_args.add(explain, true);
  explain->add_option("TEXT", text_arg, "Text to explain");
  explain->add_option("--text", text_arg, "Text to explain");
  explain->add_option("--file", text_file, "Read the text from a file");
  explain->add_option("--output", output, "Output format")
      ->check(CLI::IsMember({"json", "ansi", "html"}))
      ->capture_default_str();
  explain->add_option("--out", out_path, "Write the rendering to a file instead of stdout");
  explain->add_option("--json-out", json_out, "Also write the explanation JSON to a file");
  explain->add_flag("--no-timing", no_timing, "Write wall_time_s as null for reproducible output");

  // eval
  auto* eval = app.add_subcommand("eval", "Faithfulness and robustness metrics over a corpus");
  ModelArgs eval_model;
  ExplainArgs eval_args;
  std::string corpus, label, order = "length", metrics, scores_path, eval_json_out;
  std::size_t max_docs = 100, robustness_k = 10;
  int predicted_class = -1;
  bool no_random = false, eval_json_stdout = false;
  eval_model.add(eval);
  eval_args.add(eval, false);
  eval->add_option("--corpus", corpus, "Corpus file (text lines or JSON lines)")->required();
  eval->add_option("--max-docs", max_docs, "Documents to evaluate")->capture_default_str();
  eval->add_option("--class", predicted_class, "Keep documents predicted as this class");
  eval->add_option("--label", label, "Keep documents with this label");
  eval->add_option("--order", order, "Document order before truncation")
      ->check(CLI::IsMember({"length", "corpus"}))
      ->capture_default_str();
  eval->add_option("--robustness-k", robustness_k, "Repeated runs for robustness")->capture_default_str();
  eval->add_option("--metrics", metrics,
                   "Comma-separated subset of sufficiency,comprehensiveness,robustness,aucmorf,time,proportion");
  eval->add_flag("--no-random", no_random, "Skip the random-subset baseline");
  eval->add_option("--scores", scores_path, "Score vectors of other explainers (JSON lines)");
  eval->add_option("--json-out", eval_json_out, "Write the JSON report to a file");
  eval->add_flag("--json", eval_json_stdout, "Print the JSON report instead of the table");

  // sample-size
  auto* sample_size = app.add_subcommand("sample-size", "Print the number of samples the explainer draws");
  double ss_alpha = 0.95, ss_p = 0.5;
  int ss_l_max = 10;
  sample_size->add_option("--alpha", ss_alpha, "Coverage confidence")->capture_default_str();
  sample_size->add_option("--p", ss_p, "Probability that a token is perturbed")->capture_default_str();
  sample_size->add_option("--l-max", ss_l_max, "Largest candidate size")->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "Run the oracle checks");
  std::vector<std::string> checks;
  std::uint64_t verify_seed = 0;
  std::string verify_json_out;
  verify->add_option("--check", checks,
                     "Check to run (repeatable): sample-size, estimator, coverage, linear, shortcut, "
                     "cross-oracle, mask-equivalence");
  verify->add_option("--seed", verify_seed, "Seed for the random instances")->capture_default_str();
  verify->add_option("--json-out", verify_json_out, "Write the JSON report to a file");

  // serve-check
  auto* serve_check = app.add_subcommand("serve-check", "Check a remote endpoint against a recorded fixture");
  std::string sc_url, sc_fixture;
  serve_check->add_option("--url", sc_url, "Base URL of the endpoint")->required();
  serve_check->add_option("--fixture", sc_fixture, "Recorded request/response fixture")->required();

  // fit-vectorizer
  auto* fit = app.add_subcommand("fit-vectorizer", "Fit a TF-IDF vectorizer on a corpus");
  std::string fit_corpus, fit_out;
  fit->add_option("--corpus", fit_corpus, "Corpus file")->required();
  fit->add_option("--out", fit_out, "Output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(FRED_ERR_CONFIG, e.what());
  }

  if (explain->parsed()) {
    return run_explain(explain_model, explain_args, text_arg, text_file, output, out_path, json_out, no_timing);
  }

  if (eval->parsed()) {
    LexiconPtr lexicon;
    std::string message;
    if (auto s = eval_args.open_lexicon(lexicon, message); s != FRED_OK) return report_error(s, message);
    if (!eval_model.selected()) return report_error(FRED_ERR_CONFIG, eval_model.selection_error());
    ModelPtr model;
    if (auto s = eval_model.open(model); s != FRED_OK) return report_error(s);
    const auto options = eval_args.options();
    fred_eval_options eo;
    fred_eval_options_init(&eo);
    eo.max_documents = max_docs;
    eo.predicted_class = predicted_class;
    eo.label = label.empty() ? nullptr : label.c_str();
    eo.order_by_length = order == "length" ? 1 : 0;
    eo.robustness_runs = robustness_k;
    eo.metrics = metrics.c_str();
    eo.random_baseline = no_random ? 0 : 1;
    eo.external_scores_path = scores_path.empty() ? nullptr : scores_path.c_str();
    eo.threads = eval_args.threads;
    Owned report, table;
    if (auto s = fred_evaluate(model.get(), corpus.c_str(), &options, &eo, lexicon.get(), &report.p, &table.p);
        s != FRED_OK) {
      return report_error(s);
    }
    std::cout << (eval_json_stdout ? report.str() : table.str());
    if (!eval_json_out.empty() && !write_file(eval_json_out, report.str())) {
      return report_error(FRED_ERR_CONFIG, "cannot write --json-out " + eval_json_out);
    }
    return 0;
  }

  if (sample_size->parsed()) {
    std::size_t n = 0;
    if (auto s = fred_required_sample_size(ss_alpha, ss_p, ss_l_max, &n); s != FRED_OK) return report_error(s);
    std::cout << n << "\n";
    return 0;
  }

  if (verify->parsed()) {
    std::string list;
    for (const auto& c : checks) list += (list.empty() ? "" : ",") + c;
    Owned report;
    const fred_status s = fred_verify(list.c_str(), verify_seed, &report.p);
    if (s != FRED_OK && s != FRED_ERR_VERIFICATION) return report_error(s);
    const std::string failure = s == FRED_ERR_VERIFICATION ? fred_last_error() : "";
    for (const auto& r : nlohmann::json::parse(report.str())) {
      std::printf("%-4s %-17s %7.2fs  %s\n", r["passed"].get<bool>() ? "ok" : "FAIL",
                  r["name"].get<std::string>().c_str(), r["seconds"].get<double>(),
                  r["detail"].get<std::string>().c_str());
    }
    if (!verify_json_out.empty() && !write_file(verify_json_out, report.str())) {
      return report_error(FRED_ERR_CONFIG, "cannot write --json-out " + verify_json_out);
    }
    if (s == FRED_ERR_VERIFICATION) return report_error(s, failure);
    return 0;
  }

  if (serve_check->parsed()) {
    const auto auth = auth_header();
    Owned report;
    const fred_status s = fred_serve_check(sc_url.c_str(), sc_fixture.c_str(), auth ? auth->c_str() : nullptr, &report.p);
    if (s != FRED_OK && s != FRED_ERR_VERIFICATION) return report_error(s);
    const std::string failure = s == FRED_ERR_VERIFICATION ? fred_last_error() : "";
    for (const auto& r : nlohmann::json::parse(report.str())) {
      std::printf("%-4s %-19s %s\n", r["passed"].get<bool>() ? "ok" : "FAIL",
                  r["name"].get<std::string>().c_str(), r["detail"].get<std::string>().c_str());
    }
    if (s == FRED_ERR_VERIFICATION) return report_error(s, failure);
    return 0;
  }

  if (fit->parsed()) {
    if (auto s = fred_vectorizer_fit(fit_corpus.c_str(), fit_out.c_str()); s != FRED_OK) return report_error(s);
    return 0;
  }
  return 2;
}
