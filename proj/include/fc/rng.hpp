#pragma once

#include <cstdint>

namespace fc {

/// Counter-based substreams: every variate is a pure function of
/// (seed, path, step, slot), so simulations are reproducible independently of
/// the parallel schedule.
struct SubstreamRng {
    uint64_t seed = 0;

    /// Uniform in the open interval (0,1).
    double uniform(uint64_t path, uint64_t step, uint64_t slot) const;

    /// Standard normal via the inverse CDF.
    double normal(uint64_t path, uint64_t step, uint64_t slot) const;

    /// Inverse Gaussian with mean mu and shape lam (density
    /// sqrt(lam/(2 pi x^3)) exp(-lam (x-mu)^2 / (2 mu^2 x))), sampled by the
    /// two-root transformation; consumes slots `slot` and `slot + 1`.
    double inverse_gaussian(double mu, double lam, uint64_t path, uint64_t step,
                            uint64_t slot) const;
};

} // namespace fc
