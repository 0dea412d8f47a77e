#pragma once

// Shared fixtures and independent oracles for the test suites. Oracle code
// here must stay independent of the implementation paths it checks: the
// integrators are plain adaptive Simpson on lambdas, curve values go through
// Curve::operator() only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "fc/covariance.hpp"
#include "fc/curve.hpp"
#include "fc/delivery.hpp"

namespace tsup {

// ---- adaptive Simpson oracle ------------------------------------------------

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate_oracle(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12) {
    if (b <= a) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

/// Oracle integration split at known discontinuities (adaptive Simpson can
/// terminate spuriously when a jump sits symmetrically in a panel).
inline double integrate_oracle_split(const std::function<double(double)>& f, double a, double b,
                                     std::vector<double> breaks, double tol = 1e-12) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double s = 0.0, prev = a;
    for (double p : breaks) {
        if (p <= prev || p > b) continue;
        s += integrate_oracle(f, prev, p, tol);
        prev = p;
    }
    return s;
}

// ---- fixtures ---------------------------------------------------------------

inline std::vector<double> working_grid(double hi = 3.0, int cells = 30) {
    std::vector<double> g;
    for (int i = 1; i <= cells; ++i) g.push_back(hi * i / cells);
    return g;
}

inline fc::Curve random_curve(fc::AlphaWeight space, std::mt19937& rng,
                              const std::vector<double>& grid, double level_scale = 2.0,
                              double slope_scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> slopes;
    slopes.reserve(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) slopes.push_back(slope_scale * u(rng));
    return fc::Curve(space, level_scale * u(rng), grid, std::move(slopes));
}

/// Orthonormal modes spanning random directions of the grid space.
inline std::vector<fc::Curve> random_modes(fc::AlphaWeight space, std::mt19937& rng,
                                           const std::vector<double>& grid, int n) {
    std::vector<fc::Curve> raw;
    for (int k = 0; k < n; ++k) raw.push_back(random_curve(space, rng, grid));
    fc::Basis b = fc::gram_schmidt(raw);
    return b.elements();
}

inline fc::CovOp random_covop(fc::AlphaWeight space, std::mt19937& rng,
                              const std::vector<double>& grid, int n, double lambda0 = 0.5,
                              double decay = 0.6) {
    std::vector<double> lambdas;
    for (int k = 0; k < n; ++k) lambdas.push_back(lambda0 * std::pow(decay, k));
    return fc::CovOp(std::move(lambdas), random_modes(space, rng, grid, n));
}

/// Valid (scale <= 1) or invalid (scale > 1) block with whitened cross norm
/// equal to `scale`.
inline fc::BlockCov random_block(fc::AlphaWeight space, std::mt19937& rng,
                                 const std::vector<double>& grid, int n1, int n2,
                                 double scale) {
    fc::CovOp q1 = random_covop(space, rng, grid, n1, 0.4, 0.7);
    fc::CovOp q2 = random_covop(space, rng, grid, n2, 0.3, 0.65);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) m(i, j) = nd(rng);
    double sn = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().maxCoeff();
    m *= scale / sn;
    Eigen::MatrixXd c(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            c(i, j) = std::sqrt(q1.lambdas()[i] * q2.lambdas()[j]) * m(i, j);
    return fc::BlockCov(std::move(q1), std::move(q2), std::move(c));
}

// ---- statistics -------------------------------------------------------------

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= std::max<size_t>(1, v.size() - 1);
    return {m, std::sqrt(s2 / v.size())};
}

/// Sample covariance with its (delta-method) standard error.
inline MeanSe cov_se(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double c = 0.0, m4 = 0.0;
    for (size_t i = 0; i < n; ++i) c += (a[i] - ma) * (b[i] - mb);
    c /= n - 1;
    for (size_t i = 0; i < n; ++i) {
        double d = (a[i] - ma) * (b[i] - mb) - c;
        m4 += d * d;
    }
    m4 /= n;
    return {c, std::sqrt(m4 / n)};
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double c = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        c += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return c / std::sqrt(va * vb);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

} // namespace tsup
