#include "pricefb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pricefb/errors.hpp"

namespace pricefb {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void take(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double m = 0.04 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

}  // namespace

void write_line_chart(const std::string& path, const std::vector<Series>& series,
                      const ChartOptions& opts) {
    std::ofstream os(path);
    if (!os) fail(errc::config_error, "cannot open for writing: " + path);

    const double ml = 70, mr = 20, mt = 34, mb = 48;
    const double pw = opts.width - ml - mr, ph = opts.height - mt - mb;

    Range rx, ry;
    for (const auto& s : series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            const double y = s.y[i];
            if (opts.log_y && !(y > 0.0)) continue;
            rx.take(s.x[i]);
            ry.take(opts.log_y ? std::log10(y) : y);
        }
    }
    if (!std::isfinite(rx.lo)) {
        rx.take(0.0);
        ry.take(0.0);
    }
    rx.pad();
    ry.pad();

    const auto px = [&](double x) { return ml + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
    const auto py = [&](double y) { return mt + ph - (y - ry.lo) / (ry.hi - ry.lo) * ph; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
       << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << opts.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"14\">" << opts.title << "</text>\n";

    // axes box and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = rx.lo + k * (rx.hi - rx.lo) / 5.0;
        const double fy = ry.lo + k * (ry.hi - ry.lo) / 5.0;
        os << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(fx)
           << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(fx)
           << "</text>\n";
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\""
           << py(fy) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << ml - 7 << "\" y=\"" << py(fy) + 3
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
           << num(opts.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opts.height - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << opts.xlabel
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << opts.ylabel << "</text>\n";

    int ci = 0;
    double ly = mt + 14;
    for (const auto& s : series) {
        const char* color = kColors[ci % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            const double y = s.y[i];
            if (opts.log_y && !(y > 0.0)) continue;
            os << num(px(s.x[i])) << ',' << num(py(opts.log_y ? std::log10(y) : y)) << ' ';
        }
        os << "\"/>\n";
        if (!s.label.empty()) {
            os << "<line x1=\"" << ml + pw - 130 << "\" y1=\"" << ly << "\" x2=\""
               << ml + pw - 110 << "\" y2=\"" << ly << "\" stroke=\"" << color
               << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << ml + pw - 105 << "\" y=\"" << ly + 3
               << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.label << "</text>\n";
            ly += 14;
        }
        ++ci;
    }
    os << "</svg>\n";
}

}  // namespace pricefb
