#pragma once

#include <string>
#include <vector>

namespace rootopt::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line chart. Non-finite points are dropped; `log_y` plots log10(y)
/// and drops non-positive values.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                           const std::string& y_label, bool log_y);

}  // namespace rootopt::cli
