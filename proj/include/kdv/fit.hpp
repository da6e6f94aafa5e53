#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace kdv {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need >= 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double d = n * sxx - sx * sx;
    return {(n * sxy - sx * sy) / d, (sy * sxx - sx * sxy) / d};
}

// Slope of log|y| against log|x|; inputs must be nonzero.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(std::abs(x[i]));
        ly[i] = std::log(std::abs(y[i]));
    }
    return fit_line(lx, ly).slope;
}

}  // namespace kdv
