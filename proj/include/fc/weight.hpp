#pragma once

#include <cmath>

#include "fc/errors.hpp"

namespace fc {

/// Exponential weight alpha(x) = exp(alpha_tilde * x) defining the curve space.
///
/// The space consists of absolutely continuous curves g on [0,inf) with
///   <f,g> = f(0)g(0) + int_0^inf alpha(x) f'(x) g'(x) dx.
/// alpha_tilde > 0 guarantees alpha is increasing with alpha(0)=1 and that
/// int_0^inf 1/alpha is finite, which the whole operator calculus relies on.
/// The boundary case alpha_tilde = 0 (unweighted) is rejected: the inverse
/// weight would not be integrable.
struct AlphaWeight {
    double alpha_tilde = 1.0;

    AlphaWeight() = default;
    explicit AlphaWeight(double at) : alpha_tilde(at) {
        if (!(at > 0.0) || !std::isfinite(at))
            throw config_error("AlphaWeight: alpha_tilde must be positive and finite");
    }

    double alpha(double x) const { return std::exp(alpha_tilde * x); }

    /// k^2 = int_0^inf 1/alpha = 1/alpha_tilde.
    double inv_mass() const { return 1.0 / alpha_tilde; }

    /// int_a^b 1/alpha, 0 <= a <= b.
    double inv_mass(double a, double b) const {
        return (std::exp(-alpha_tilde * a) - std::exp(-alpha_tilde * b)) / alpha_tilde;
    }

    /// int_a^b alpha, the cell weight entering the bilinear form.
    double cell_mass(double a, double b) const {
        return std::exp(alpha_tilde * a) * std::expm1(alpha_tilde * (b - a)) / alpha_tilde;
    }

    /// Banach-algebra constant k1 = sqrt(5 + 4 k^2); the pointwise exponential
    /// satisfies ||exp(g)|| <= exp(k1 ||g||) / k1.
    double banach_const() const { return std::sqrt(5.0 + 4.0 * inv_mass()); }

    /// Squared bound of the shift semigroup: ||S_x||_op^2 <= 2 max(1, k^2).
    double shift_bound_sq() const { return 2.0 * std::max(1.0, inv_mass()); }

    /// Squared norm of the point-evaluation functional, 1 + int_0^x 1/alpha.
    double delta_norm_sq(double x) const { return 1.0 + inv_mass(0.0, x); }

    bool operator==(const AlphaWeight& o) const { return alpha_tilde == o.alpha_tilde; }
    bool operator!=(const AlphaWeight& o) const { return !(*this == o); }
};

} // namespace fc
