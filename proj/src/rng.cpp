#include "fc/rng.hpp"

#include <cmath>

#include "fc/normal.hpp"

namespace fc {

namespace {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t mix_key(uint64_t seed, uint64_t path, uint64_t step, uint64_t slot) {
    uint64_t h = splitmix64(seed ^ 0xD1B54A32D192ED03ull);
    h = splitmix64(h ^ (path * 0x9E3779B97F4A7C15ull + 1));
    h = splitmix64(h ^ (step * 0xBF58476D1CE4E5B9ull + 1));
    h = splitmix64(h ^ (slot * 0x94D049BB133111EBull + 1));
    return h;
}

} // namespace

double SubstreamRng::uniform(uint64_t path, uint64_t step, uint64_t slot) const {
    uint64_t h = mix_key(seed, path, step, slot);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double SubstreamRng::normal(uint64_t path, uint64_t step, uint64_t slot) const {
    return norm_quantile(uniform(path, step, slot));
}

double SubstreamRng::inverse_gaussian(double mu, double lam, uint64_t path, uint64_t step,
                                      uint64_t slot) const {
    double n = normal(path, step, slot);
    double y = n * n;
    double x = mu + 0.5 * mu * mu * y / lam -
               0.5 * (mu / lam) * std::sqrt(4.0 * mu * lam * y + mu * mu * y * y);
    double u = uniform(path, step, slot + 1);
    return u <= mu / (mu + x) ? x : mu * mu / x;
}

} // namespace fc
