#pragma once

#include <span>

namespace pricefb {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;  ///< root-mean-square residual of the fit
};

/// Ordinary least squares y ~ intercept + slope * x; needs >= 2 points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace pricefb
