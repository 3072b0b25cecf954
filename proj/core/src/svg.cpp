// Copyright 2026 The miniresnet Authors
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

#include "miniresnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace miniresnet {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string fmt(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string loss_curves_svg(
    const std::vector<std::pair<std::string, std::vector<EpochRecord>>>& curves,
    const std::string& title) {
  const double width = 640.0;
  const double height = 400.0;
  const double left = 70.0;
  const double right = width - 20.0;
  const double top = 40.0;
  const double bottom = height - 40.0;

  int max_epoch = 1;
  double min_loss = 0.0;
  double max_loss = 0.0;
  bool any = false;
  for (const auto& [run_id, history] : curves) {
    for (const EpochRecord& record : history) {
      const double loss = std::max(record.mean_loss, 1e-12);
      if (!any) {
        min_loss = max_loss = loss;
        any = true;
      } else {
        min_loss = std::min(min_loss, loss);
        max_loss = std::max(max_loss, loss);
      }
      max_epoch = std::max(max_epoch, record.epoch);
    }
  }
  if (!any) {
    min_loss = 1e-3;
    max_loss = 1.0;
  }
  double log_min = std::log10(min_loss);
  double log_max = std::log10(max_loss);
  if (log_max - log_min < 1e-9) {
    log_min -= 0.5;
    log_max += 0.5;
  }

  const auto x_of = [&](int epoch) {
    return left + (right - left) * epoch / static_cast<double>(std::max(max_epoch, 1));
  };
  const auto y_of = [&](double loss) {
    const double t = (std::log10(std::max(loss, 1e-12)) - log_min) / (log_max - log_min);
    return bottom - (bottom - top) * t;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "  <text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << escape_xml(title) << "</text>\n";
  out << "  <line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";

  const int first_decade = static_cast<int>(std::ceil(log_min - 1e-9));
  const int last_decade = static_cast<int>(std::floor(log_max + 1e-9));
  for (int decade = first_decade; decade <= last_decade; ++decade) {
    const double y = y_of(std::pow(10.0, decade));
    out << "  <line x1=\"" << left << "\" y1=\"" << fmt(y) << "\" x2=\"" << right << "\" y2=\""
        << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
    out << "  <text x=\"" << left - 8 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\""
        << " font-family=\"sans-serif\" font-size=\"11\">1e" << decade << "</text>\n";
  }
  const int epoch_step = std::max(1, max_epoch / 10);
  for (int epoch = 0; epoch <= max_epoch; epoch += epoch_step) {
    const double x = x_of(epoch);
    out << "  <text x=\"" << fmt(x) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\""
        << " font-family=\"sans-serif\" font-size=\"11\">" << epoch << "</text>\n";
  }
  out << "  <text x=\"" << (left + right) / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";

  int series = 0;
  for (const auto& [run_id, history] : curves) {
    if (!history.empty()) {
      out << "  <polyline fill=\"none\" stroke=\"" << kPalette[series % kPaletteSize]
          << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (const EpochRecord& record : history) {
        if (!first) {
          out << ' ';
        }
        first = false;
        out << fmt(x_of(record.epoch)) << ',' << fmt(y_of(record.mean_loss));
      }
      out << "\"/>\n";
    }
    const double legend_y = top + 14.0 * series;
    out << "  <rect x=\"" << right - 150 << "\" y=\"" << fmt(legend_y) << "\" width=\"10\""
        << " height=\"10\" fill=\"" << kPalette[series % kPaletteSize] << "\"/>\n";
    out << "  <text x=\"" << right - 136 << "\" y=\"" << fmt(legend_y + 9)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(run_id) << "</text>\n";
    ++series;
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_svg(const Heatmap& heatmap, const std::string& title) {
  const int n = heatmap.categories();
  const double cell = 28.0;
  const double left = 60.0;
  const double top = 50.0;
  const double width = left + n * cell + 30.0;
  const double height = top + n * cell + 50.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "  <text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"15\">" << escape_xml(title) << "</text>\n";
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const double value = heatmap.cells[static_cast<std::size_t>(row) * n + col];
      const int shade = 255 - static_cast<int>(std::lround(std::min(value, 100.0) * 2.0));
      const double x = left + col * cell;
      const double y = top + row * cell;
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02xff", shade, shade);
      out << "  <rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << color << "\" stroke=\"#cccccc\"/>\n";
      if (value > 0.0) {
        char label[16];
        std::snprintf(label, sizeof(label), "%.0f", value);
        out << "  <text x=\"" << fmt(x + cell / 2) << "\" y=\"" << fmt(y + cell / 2 + 4)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\""
            << (shade < 110 ? " fill=\"white\"" : "") << ">" << label << "</text>\n";
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int category = heatmap.min_category + i;
    out << "  <text x=\"" << fmt(left + i * cell + cell / 2) << "\" y=\"" << fmt(top - 8)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << category
        << "</text>\n";
    out << "  <text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(top + i * cell + cell / 2 + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << category
        << "</text>\n";
  }
  out << "  <text x=\"" << fmt(left + n * cell / 2.0) << "\" y=\"" << fmt(height - 14)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">predicted"
      << " category</text>\n";
  out << "  <text x=\"16\" y=\"" << fmt(top + n * cell / 2.0) << "\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << fmt(top + n * cell / 2.0) << ")\">true category</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace miniresnet
