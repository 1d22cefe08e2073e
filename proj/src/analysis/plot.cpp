#include "boocap/analysis/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "boocap/error.hpp"

namespace boocap::analysis {

namespace {

constexpr double kWidth = 720, kHeight = 400;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 80;
const char* const kColors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double lo = 0, hi = 1;
  double y(double v) const { return kTop + (hi - v) / (hi - lo) * (kHeight - kTop - kBottom); }
};

Frame frame_for(const std::vector<Series>& series, std::size_t n) {
  Frame f{0, 0};
  for (const auto& s : series) {
    if (s.values.size() != n) throw ValidationError("plot series '" + s.name + "' has the wrong length");
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      f.lo = std::min(f.lo, v);
      f.hi = std::max(f.hi, v);
    }
  }
  if (f.hi == f.lo) f.hi = f.lo + 1;
  return f;
}

void header(std::ostringstream& os, const std::string& title, const Frame& f) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight;
  for (int t = 0; t <= 4; ++t) {
    const double v = f.lo + (f.hi - f.lo) * t / 4.0;
    os << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << num(f.y(v)) << "\" y2=\"" << num(f.y(v))
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << num(f.y(v) + 4) << "\" text-anchor=\"end\">" << num(v)
       << "</text>\n";
  }
  os << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << num(f.y(0)) << "\" y2=\"" << num(f.y(0))
     << "\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& os, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    os << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[i % 7] << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 26 << "\" y=\"" << y + 9 << "\">" << escape(series[i].name)
       << "</text>\n";
  }
}

void x_label(std::ostringstream& os, double x, const std::string& label) {
  const double y = kHeight - kBottom + 14;
  os << "<text x=\"" << num(x) << "\" y=\"" << y << "\" text-anchor=\"end\" transform=\"rotate(-40 " << num(x) << ' '
     << y << ")\">" << escape(label) << "</text>\n";
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series) {
  const auto f = frame_for(series, labels.size());
  std::ostringstream os;
  header(os, title, f);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(labels.size(), 1));
  const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[i];
      if (!std::isfinite(v)) continue;
      const double top = std::min(f.y(v), f.y(0));
      os << "<rect x=\"" << num(x + bar * static_cast<double>(s)) << "\" y=\"" << num(top) << "\" width=\""
         << num(bar) << "\" height=\"" << num(std::abs(f.y(v) - f.y(0))) << "\" fill=\"" << kColors[s % 7]
         << "\"/>\n";
    }
    x_label(os, x + slot * 0.4, labels[i]);
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<Series>& series) {
  const auto f = frame_for(series, x_labels.size());
  std::ostringstream os;
  header(os, title, f);
  const double span = kWidth - kLeft - kRight;
  auto x_at = [&](std::size_t i) {
    return x_labels.size() < 2 ? kLeft + span / 2
                               : kLeft + span * static_cast<double>(i) / static_cast<double>(x_labels.size() - 1);
  };
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << kColors[s % 7] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x_labels.size(); ++i) {
      if (!std::isfinite(series[s].values[i])) continue;
      os << num(x_at(i)) << ',' << num(f.y(series[s].values[i])) << ' ';
    }
    os << "\"/>\n";
  }
  for (std::size_t i = 0; i < x_labels.size(); ++i) x_label(os, x_at(i), x_labels[i]);
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

}  // namespace boocap::analysis
