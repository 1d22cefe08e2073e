#pragma once

#include <string>
#include <utility>
#include <vector>

namespace boocap::analysis {

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Grouped vertical bars, one group per label and one bar per series.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series);

/// One polyline per series over evenly spaced x labels.
std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<Series>& series);

}  // namespace boocap::analysis
