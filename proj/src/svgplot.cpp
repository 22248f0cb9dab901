#include "smx/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace smx {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%.4g", v);
  return b;
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series) {
  if (series.empty()) fail(ErrorCode::invalid_config, "line plot needs at least one series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size())
      fail(ErrorCode::length_mismatch, "series \"" + s.name + "\" has mismatched x/y");
    if (s.x.empty())
      fail(ErrorCode::invalid_config, "series \"" + s.name + "\" is empty");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        fail(ErrorCode::invalid_config, "series \"" + s.name + "\" has non-finite values");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
                kWidth, kHeight, kWidth, kHeight);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         esc(title) + "</text>\n";
  // axes
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                kLeft, kTop + ph, kLeft + pw, kTop + ph, kLeft, kTop, kLeft, kTop + ph);
  svg += buf;
  for (int t = 0; t <= 5; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 5.0;
    const double fy = ymin + (ymax - ymin) * t / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
                  px(fx), kTop + ph + 18, fmt(fx).c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n", kLeft - 6,
                  py(fy) + 4, fmt(fy).c_str());
    svg += buf;
  }
  svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 14) +
         "\" text-anchor=\"middle\">" + esc(x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(kTop + ph / 2) + ")\">" + esc(y_label) + "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (size_t i = 0; i < series[si].x.size(); ++i)
      pts += fmt(px(series[si].x[i])) + "," + fmt(py(series[si].y[i])) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    for (size_t i = 0; i < series[si].x.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"%s\"/>\n",
                    px(series[si].x[i]), py(series[si].y[i]), color);
      svg += buf;
    }
    const double ly = kTop + 14.0 * static_cast<double>(si);
    svg += "<rect x=\"" + fmt(kLeft + pw - 130) + "\" y=\"" + fmt(ly) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + fmt(kLeft + pw - 115) + "\" y=\"" + fmt(ly + 9) + "\">" +
           esc(series[si].name) + "</text>\n";
  }
  svg += "</svg>\n";
  write_atomic(path, svg);
}

void write_heatmap_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<double>>& values) {
  const size_t rows = values.size();
  if (rows == 0 || row_labels.size() != rows)
    fail(ErrorCode::length_mismatch, "heatmap rows/labels mismatch");
  const size_t cols = values[0].size();
  if (cols == 0 || col_labels.size() != cols)
    fail(ErrorCode::length_mismatch, "heatmap cols/labels mismatch");
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& row : values) {
    if (row.size() != cols) fail(ErrorCode::length_mismatch, "ragged heatmap rows");
    for (double v : row) {
      if (!std::isfinite(v)) fail(ErrorCode::invalid_config, "non-finite heatmap value");
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (vmax == vmin) vmax = vmin + 1;
  const double cell = 44, left = 110, top = 60;
  const double w = left + cell * cols + 30, h = top + cell * rows + 40;

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"11\">\n",
                w, h, w, h);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         esc(title) + "</text>\n";
  for (size_t c = 0; c < cols; ++c)
    svg += "<text x=\"" + fmt(left + cell * (c + 0.5)) + "\" y=\"" + fmt(top - 8) +
           "\" text-anchor=\"middle\">" + esc(col_labels[c]) + "</text>\n";
  for (size_t r = 0; r < rows; ++r) {
    svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(top + cell * (r + 0.5) + 4) +
           "\" text-anchor=\"end\">" + esc(row_labels[r]) + "</text>\n";
    for (size_t c = 0; c < cols; ++c) {
      const double t = (values[r][c] - vmin) / (vmax - vmin);
      // white -> blue ramp
      const int red = static_cast<int>(255 * (1 - t) + 30 * t);
      const int green = static_cast<int>(255 * (1 - t) + 90 * t);
      const int blue = static_cast<int>(255 * (1 - t) + 180 * t);
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"rgb(%d,%d,%d)\" "
                    "stroke=\"#ccc\"/>\n",
                    left + cell * c, top + cell * r, cell, cell, red, green, blue);
      svg += buf;
      const char* text_color = t > 0.6 ? "white" : "black";
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" fill=\"%s\">%s</text>\n",
                    left + cell * (c + 0.5), top + cell * (r + 0.5) + 4, text_color,
                    fmt(values[r][c]).c_str());
      svg += buf;
    }
  }
  svg += "</svg>\n";
  write_atomic(path, svg);
}

}  // namespace smx
