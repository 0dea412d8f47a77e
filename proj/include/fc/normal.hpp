#pragma once

#include <cmath>

namespace fc {

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

/// Inverse standard normal CDF (Wichura's AS 241, double-precision branch).
double norm_quantile(double p);

} // namespace fc
