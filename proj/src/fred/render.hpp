#pragma once

#include <string>

#include "fred/explainer.hpp"

namespace fred::render {

struct Rgb {
  int r = 255, g = 255, b = 255;
};

// Symmetric linear scale around 0: positive scores shade towards green,
// negative towards red, white at 0 and full saturation at |s| = max_abs.
Rgb score_color(double score, double max_abs);

// Largest |s_i| over defined scores; 0 when none is defined or all are 0.
double max_abs_score(const explainer::Explanation& e);

// Terminal rendering with 24-bit background colors: the saliency line, the
// minimal subset and the counterfactuals.
std::string ansi(const explainer::Explanation& e);

// Self-contained HTML page (inline styles, no external assets) with the same
// three panels.
std::string html(const explainer::Explanation& e);

std::string html_escape(const std::string& s);

}  // namespace fred::render
