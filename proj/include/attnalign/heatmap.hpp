// Copyright 2026 The attnalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// SVG attention heatmaps: one row per target token, one column per source
// token, darker cells for larger weights. Gold links are drawn as outlined
// cells on top.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "attnalign/alignment.hpp"
#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"

namespace attnalign {

struct HeatmapSpec {
  std::size_t sentence_id = 0;
  Tokens source;
  Tokens target;
  AttentionRows attention;
  LinkSet gold;  // drawn as outlines; may be empty
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

}  // namespace detail

inline constexpr int kHeatmapCell = 28;

/// Renders a heatmap. Output bytes depend only on the spec.
inline std::string render_heatmap_svg(const HeatmapSpec& spec) {
  const std::size_t rows = spec.target.size(), cols = spec.source.size();
  if (spec.attention.size() != rows) {
    throw ShapeError("heatmap: " + std::to_string(spec.attention.size()) + " attention rows for " +
                     std::to_string(rows) + " target tokens");
  }
  for (const auto& r : spec.attention) {
    if (r.size() != cols) {
      throw ShapeError("heatmap: attention row of " + std::to_string(r.size()) + " for " + std::to_string(cols) +
                       " source tokens");
    }
  }
  std::size_t longest = 1;
  for (const auto* side : {&spec.source, &spec.target}) {
    for (const auto& t : *side) longest = std::max(longest, t.size());
  }
  const int cell = kHeatmapCell;
  const int margin = 12 + 7 * static_cast<int>(std::min<std::size_t>(longest, 24));
  const int width = margin + cell * static_cast<int>(cols) + 8;
  const int height = margin + cell * static_cast<int>(rows) + 8;

  std::string svg;
  svg += detail::fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                     width, height, width, height);
  svg += detail::fmt("<title>sentence %zu</title>\n", spec.sentence_id);
  svg += "<style>text{font-family:sans-serif;font-size:12px}</style>\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t c = 0; c < cols; ++c) {
    const int x = margin + cell * static_cast<int>(c) + cell / 2 + 4;
    svg += detail::fmt("<text class=\"source\" x=\"%d\" y=\"%d\" transform=\"rotate(-60 %d %d)\">", x, margin - 6, x,
                       margin - 6);
    svg += detail::xml_escape(spec.source[c]) + "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = margin + cell * static_cast<int>(r) + cell / 2 + 4;
    svg += detail::fmt("<text class=\"target\" x=\"%d\" y=\"%d\" text-anchor=\"end\">", margin - 6, y);
    svg += detail::xml_escape(spec.target[r]) + "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double w = std::clamp(spec.attention[r][c], 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - w)));
      svg += detail::fmt(
          "<rect class=\"cell\" data-row=\"%zu\" data-col=\"%zu\" data-weight=\"%.6f\" x=\"%d\" y=\"%d\" "
          "width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\"/>\n",
          r, c, w, margin + cell * static_cast<int>(c), margin + cell * static_cast<int>(r), cell, cell, shade, shade,
          shade);
    }
  }
  for (const auto& l : spec.gold) {
    if (l.source >= cols || l.target >= rows) {
      throw ShapeError("heatmap: gold link " + std::to_string(l.source) + "-" + std::to_string(l.target) +
                       " outside the matrix");
    }
    svg += detail::fmt(
        "<rect class=\"gold\" data-row=\"%zu\" data-col=\"%zu\" x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
        "fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n",
        l.target, l.source, margin + cell * static_cast<int>(l.source) + 1, margin + cell * static_cast<int>(l.target) + 1,
        cell - 2, cell - 2);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace attnalign
