#include "esa/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace esa {

namespace {

constexpr const char* kHeader = "episode,episode_regret,cum_regret";

double parse_field(const std::string& field, const std::string& path, std::size_t line) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size() || field.empty()) {
    throw std::runtime_error(path + ":" + std::to_string(line) +
                             ": not a number: \"" + field + "\"");
  }
  return value;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Tick positions at 1-2-5 steps covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
  const double range = hi - lo;
  if (!(range > 0.0)) return {lo};
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) {
      step = mag * mult;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
    ticks.push_back(t);
  return ticks;
}

// Decade ticks for log-scaled axes; lo and hi are already log10 values.
std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> ticks;
  for (double d = std::ceil(lo - 1e-9); d <= hi + 1e-9; d += 1.0) ticks.push_back(d);
  if (ticks.empty()) ticks.push_back(lo);
  return ticks;
}

std::string tick_label(double value, bool log_scale) {
  char buf[48];
  if (log_scale) {
    const double v = std::pow(10.0, value);
    std::snprintf(buf, sizeof(buf), "%g", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%g", value);
  }
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

RegretCurve load_regret_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw std::runtime_error(path + ": bad header \"" + line + "\" (expected \"" +
                             kHeader + "\")");
  }
  RegretCurve curve;
  curve.label = std::filesystem::path(path).stem().string();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                   : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 3 comma-separated fields");
    }
    curve.episode.push_back(parse_field(line.substr(0, c1), path, line_no));
    parse_field(line.substr(c1 + 1, c2 - c1 - 1), path, line_no);  // validated, unused
    curve.cum.push_back(parse_field(line.substr(c2 + 1), path, line_no));
  }
  return curve;
}

void write_regret_svg(const std::vector<RegretCurve>& curves,
                      const std::string& path, bool loglog) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kPalette[] = {"#4682b4", "#dc143c", "#2e8b57",
                                   "#ff8c00", "#800080", "#008080"};

  // Collect transformed points per curve; episode axis is 1-based so the log
  // scale is defined at episode index 0.
  struct Pt {
    double x, y;
  };
  std::vector<std::vector<Pt>> series;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (const RegretCurve& curve : curves) {
    std::vector<Pt> pts;
    for (std::size_t i = 0; i < curve.episode.size() && i < curve.cum.size(); ++i) {
      double x = curve.episode[i] + 1.0;
      double y = curve.cum[i];
      if (loglog) {
        if (!(x > 0.0) || !(y > 0.0)) continue;
        x = std::log10(x);
        y = std::log10(y);
      }
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
      pts.push_back({x, y});
    }
    series.push_back(std::move(pts));
  }
  if (!any) throw std::runtime_error("plot: no drawable data points");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  const auto py = [&](double y) {
    return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const std::vector<double> xticks =
      loglog ? decade_ticks(xmin, xmax) : linear_ticks(xmin, xmax);
  const std::vector<double> yticks =
      loglog ? decade_ticks(ymin, ymax) : linear_ticks(ymin, ymax);
  for (double t : xticks) {
    if (t < xmin - 1e-9 || t > xmax + 1e-9) continue;
    const std::string x = fmt(px(t));
    svg << "  <line x1=\"" << x << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << x
        << "\" y2=\"" << fmt(kTop + plot_h) << "\" stroke=\"#dddddd\"/>\n";
    svg << "  <text x=\"" << x << "\" y=\"" << fmt(kTop + plot_h + 18)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << tick_label(t, loglog) << "</text>\n";
  }
  for (double t : yticks) {
    if (t < ymin - 1e-9 || t > ymax + 1e-9) continue;
    const std::string y = fmt(py(t));
    svg << "  <line x1=\"" << fmt(kLeft) << "\" y1=\"" << y << "\" x2=\""
        << fmt(kLeft + plot_w) << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    svg << "  <text x=\"" << fmt(kLeft - 6) << "\" y=\"" << y
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\" "
           "dominant-baseline=\"middle\">"
        << tick_label(t, loglog) << "</text>\n";
  }
  svg << "  <rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\""
      << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "  <text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\""
      << fmt(kHeight - 10)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << (loglog ? "episode (log)" : "episode") << "</text>\n";
  svg << "  <text x=\"16\" y=\"" << fmt(kTop + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 "
      << fmt(kTop + plot_h / 2) << ")\">"
      << (loglog ? "cumulative regret (log)" : "cumulative regret") << "</text>\n";

  for (std::size_t c = 0; c < series.size(); ++c) {
    if (series[c].empty()) continue;
    const char* color = kPalette[c % std::size(kPalette)];
    svg << "  <polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const Pt& p : series[c]) svg << fmt(px(p.x)) << ',' << fmt(py(p.y)) << ' ';
    svg << "\"/>\n";
  }

  double legend_y = kTop + 14;
  for (std::size_t c = 0; c < series.size(); ++c) {
    if (series[c].empty()) continue;
    const char* color = kPalette[c % std::size(kPalette)];
    const double lx = kLeft + plot_w - 170;
    svg << "  <line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(legend_y - 4)
        << "\" x2=\"" << fmt(lx + 24) << "\" y2=\"" << fmt(legend_y - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "  <text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(legend_y)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(curves[c].label) << "</text>\n";
    legend_y += 18;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << svg.str();
}

}  // namespace esa
