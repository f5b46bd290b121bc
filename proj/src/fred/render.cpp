#include "fred/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace fred::render {

Rgb score_color(double score, double max_abs) {
  if (!(max_abs > 0.0) || !std::isfinite(score)) return {};
  const double t = std::clamp(std::abs(score) / max_abs, 0.0, 1.0);
  auto mix = [t](int target) { return static_cast<int>(std::lround(255.0 + (target - 255.0) * t)); };
  if (score > 0.0) return {mix(26), mix(150), mix(65)};
  if (score < 0.0) return {mix(215), mix(48), mix(39)};
  return {};
}

double max_abs_score(const explainer::Explanation& e) {
  double m = 0.0;
  for (const auto& s : e.token_scores) {
    if (s) m = std::max(m, std::abs(*s));
  }
  return m;
}

namespace {

bool dark(const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b < 140.0; }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string subset_line(const explainer::Explanation& e) {
  if (!e.minimal_subset) return "(no candidate could be evaluated)";
  std::string words;
  for (auto p : e.minimal_subset->positions) {
    if (!words.empty()) words += ", ";
    words += e.tokens[p];
  }
  return "[" + words + "] drop " + fixed(e.minimal_subset->drop) + " vs threshold " +
         fixed(e.threshold) + (e.threshold_met ? "" : " (threshold not met)");
}

}  // namespace

std::string ansi(const explainer::Explanation& e) {
  const double max_abs = max_abs_score(e);
  std::ostringstream out;
  out << "prediction " << fixed(e.original_prediction) << " for class " << e.target_class
      << ", mean over " << e.sample_count << " samples " << fixed(e.mean_prediction) << "\n\n";
  out << "scores: ";
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    const auto c = e.token_scores[i] ? score_color(*e.token_scores[i], max_abs) : Rgb{};
    out << "\x1b[48;2;" << c.r << ';' << c.g << ';' << c.b << "m"
        << (dark(c) ? "\x1b[97m" : "\x1b[30m") << ' ' << e.tokens[i] << ' ' << "\x1b[0m";
    if (i + 1 < e.tokens.size()) out << ' ';
  }
  out << "\n\nminimal subset: " << subset_line(e) << "\n";
  const auto positions = e.subset_positions();
  const std::set<std::size_t> subset(positions.begin(), positions.end());
  out << "  ";
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    if (subset.count(i)) {
      out << "\x1b[1;4m" << e.tokens[i] << "\x1b[0m";
    } else {
      out << "\x1b[2m" << e.tokens[i] << "\x1b[0m";
    }
    if (i + 1 < e.tokens.size()) out << ' ';
  }
  out << "\n\ncounterfactuals:";
  if (!e.counterfactuals_available) {
    out << " unavailable for regression outputs\n";
  } else if (e.counterfactuals.empty()) {
    out << " none found\n";
  } else {
    out << "\n";
    for (const auto& cf : e.counterfactuals) {
      out << "  [class " << cf.predicted_class << ", " << cf.n_perturbed << " changed] ";
      for (std::size_t i = 0; i < cf.tokens.size(); ++i) {
        if (cf.tokens[i] != e.tokens[i]) {
          out << "\x1b[38;2;230;120;0m" << cf.tokens[i] << "\x1b[0m";
        } else {
          out << cf.tokens[i];
        }
        if (i + 1 < cf.tokens.size()) out << ' ';
      }
      out << "\n";
    }
  }
  for (const auto& w : e.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string html(const explainer::Explanation& e) {
  const double max_abs = max_abs_score(e);
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>FRED explanation</title>\n</head>\n"
      << "<body style=\"font-family: sans-serif; max-width: 60em; margin: 2em auto; line-height: 2;\">\n";
  out << "<p style=\"color:#555\">prediction " << fixed(e.original_prediction) << " for class "
      << e.target_class << "; mean over " << e.sample_count << " samples "
      << fixed(e.mean_prediction) << "</p>\n";

  out << "<h2 style=\"font-size:1.1em\">Token influence</h2>\n<p>";
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    const auto c = e.token_scores[i] ? score_color(*e.token_scores[i], max_abs) : Rgb{};
    const std::string title = e.token_scores[i] ? fixed(*e.token_scores[i], 4) : "undefined";
    out << "<span title=\"" << title << "\" style=\"background-color:rgb(" << c.r << ',' << c.g
        << ',' << c.b << ");color:" << (dark(c) ? "#fff" : "#000")
        << ";padding:0.15em 0.3em;border-radius:0.2em\">" << html_escape(e.tokens[i])
        << "</span> ";
  }
  out << "</p>\n";

  out << "<h2 style=\"font-size:1.1em\">Minimal subset</h2>\n<p>";
  const auto positions = e.subset_positions();
  const std::set<std::size_t> subset(positions.begin(), positions.end());
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    if (subset.count(i)) {
      out << "<strong style=\"text-decoration:underline\">" << html_escape(e.tokens[i]) << "</strong> ";
    } else {
      out << "<span style=\"color:#999\">" << html_escape(e.tokens[i]) << "</span> ";
    }
  }
  out << "</p>\n<p style=\"color:#555\">" << html_escape(subset_line(e)) << "</p>\n";

  out << "<h2 style=\"font-size:1.1em\">Counterfactuals</h2>\n";
  if (!e.counterfactuals_available) {
    out << "<p>Unavailable for regression outputs.</p>\n";
  } else if (e.counterfactuals.empty()) {
    out << "<p>None found.</p>\n";
  } else {
    out << "<ul>\n";
    for (const auto& cf : e.counterfactuals) {
      out << "<li>class " << cf.predicted_class << ", " << cf.n_perturbed << " changed: ";
      for (std::size_t i = 0; i < cf.tokens.size(); ++i) {
        if (cf.tokens[i] != e.tokens[i]) {
          out << "<span style=\"color:#e67800;font-weight:bold\">" << html_escape(cf.tokens[i])
              << "</span> ";
        } else {
          out << html_escape(cf.tokens[i]) << ' ';
        }
      }
      out << "</li>\n";
    }
    out << "</ul>\n";
  }
  for (const auto& w : e.warnings) {
    out << "<p style=\"color:#a60\">warning: " << html_escape(w) << "</p>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

}  // namespace fred::render
