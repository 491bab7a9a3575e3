#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ofjet {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("fit_line: abscissae are all equal");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.points = static_cast<int>(x.size());
    return fit;
}

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

inline MeanEstimate mean_and_se(const std::vector<double>& v)
{
    if (v.empty()) {
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    }
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    if (v.size() < 2) {
        return {m, std::numeric_limits<double>::infinity()};
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    const double var = ss / static_cast<double>(v.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace ofjet
