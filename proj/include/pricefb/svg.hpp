#pragma once

#include <string>
#include <vector>

namespace pricefb {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartOptions {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_y = false;  ///< plot log10(y); nonpositive points are dropped
    int width = 760;
    int height = 480;
};

/// Plain SVG line chart; no display server involved, files only.
void write_line_chart(const std::string& path, const std::vector<Series>& series,
                      const ChartOptions& opts);

}  // namespace pricefb
