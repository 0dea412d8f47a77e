#include "fc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "fc/errors.hpp"
#include "fc/normal.hpp"

namespace fc {

namespace {

// Legendre P_n and derivative by recurrence.
void legendre_eval(int n, double x, double* p, double* dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    *p = p1;
    *dp = n * (x * p1 - p0) / (x * x - 1.0);
}

QuadRule make_gauss_legendre(int n) {
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess, then Newton.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p, dp;
        for (int it = 0; it < 100; ++it) {
            legendre_eval(n, x, &p, &dp);
            double dx = -p / dp;
            x += dx;
            if (std::abs(dx) < 1e-15) break;
        }
        legendre_eval(n, x, &p, &dp);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

// Hermite polynomials (physicists'), scaled recurrence to avoid overflow:
// work with ht_k = H_k / sqrt(2^k k! sqrt(pi)), orthonormal under exp(-x^2).
void hermite_eval(int n, double x, double* h, double* dh) {
    double h0 = 1.0 / std::pow(M_PI, 0.25);
    double h1 = std::sqrt(2.0) * x * h0;
    for (int k = 2; k <= n; ++k) {
        double hk = x * std::sqrt(2.0 / k) * h1 - std::sqrt((k - 1.0) / k) * h0;
        h0 = h1;
        h1 = hk;
    }
    *h = h1;
    *dh = std::sqrt(2.0 * n) * h0;
}

QuadRule make_gauss_hermite(int n) {
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x;
        if (i == 0)
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            x = r.nodes[n - 1] - 1.14 * std::pow(n, 0.426) / r.nodes[n - 1];
        else if (i == 2)
            x = 1.86 * r.nodes[n - 2] - 0.86 * r.nodes[n - 1];
        else if (i == 3)
            x = 1.91 * r.nodes[n - 3] - 0.91 * r.nodes[n - 2];
        else
            x = 2.0 * r.nodes[n - i] - r.nodes[n - i + 1];
        double h = 0.0, dh = 1.0;
        for (int it = 0; it < 200; ++it) {
            hermite_eval(n, x, &h, &dh);
            double dx = -h / dh;
            x += dx;
            if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        hermite_eval(n, x, &h, &dh);
        double w = 2.0 / (dh * dh);
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
        r.nodes[i] = -x;
        r.weights[i] = w;
    }
    if (n % 2 == 1) {
        r.nodes[n / 2] = 0.0;
        double h, dh;
        hermite_eval(n, 0.0, &h, &dh);
        r.weights[n / 2] = 2.0 / (dh * dh);
    }
    return r;
}

const QuadRule& cached(std::map<int, QuadRule>& cache, std::mutex& m, int n,
                       QuadRule (*make)(int)) {
    std::lock_guard<std::mutex> lk(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make(n)).first;
    return it->second;
}

} // namespace

const QuadRule& gauss_legendre(int n) {
    if (n < 1) throw domain_error("gauss_legendre: order must be >= 1");
    static std::map<int, QuadRule> cache;
    static std::mutex m;
    return cached(cache, m, n, &make_gauss_legendre);
}

const QuadRule& gauss_hermite(int n) {
    if (n < 1) throw domain_error("gauss_hermite: order must be >= 1");
    static std::map<int, QuadRule> cache;
    static std::mutex m;
    return cached(cache, m, n, &make_gauss_hermite);
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int order) {
    const QuadRule& r = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

double integrate_segmented(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, int order,
                           double rel_tol, bool* stable) {
    std::vector<double> pts{a, b};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double v1 = 0.0, v2 = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        v1 += integrate_gl(f, pts[i], pts[i + 1], order);
        if (stable) v2 += integrate_gl(f, pts[i], pts[i + 1], 2 * order);
    }
    if (stable) {
        double scale = std::max({std::abs(v1), std::abs(v2), 1e-300});
        *stable = std::abs(v1 - v2) <= rel_tol * scale + 1e-14 * (b - a);
        return v2;
    }
    return v1;
}

double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd,
                            std::span<const double> kinks, int order) {
    if (!(sd >= 0.0)) throw domain_error("gaussian_expectation: sd must be >= 0");
    if (sd == 0.0) return f(mean);

    std::vector<double> cuts;
    for (double k : kinks) {
        double z = (k - mean) / sd;
        if (std::abs(z) < 12.0) cuts.push_back(z);
    }
    if (cuts.empty()) {
        const QuadRule& r = gauss_hermite(order);
        const double sqrt2 = std::sqrt(2.0), inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
        double s = 0.0;
        for (size_t i = 0; i < r.nodes.size(); ++i)
            s += r.weights[i] * f(mean + sd * sqrt2 * r.nodes[i]);
        return s * inv_sqrt_pi;
    }
    cuts.push_back(-12.0);
    cuts.push_back(12.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double s = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto integrand = [&](double z) { return f(mean + sd * z) * norm_pdf(z); };
        s += integrate_gl(integrand, cuts[i], cuts[i + 1], order);
    }
    return s;
}

double norm_quantile(double p) {
    // Wichura (1988), algorithm AS 241, PPND16.
    if (!(p > 0.0 && p < 1.0)) throw domain_error("norm_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double r, val;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        val = q *
              (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                    67265.770927008700853) * r + 45921.953931549871457) * r +
                  13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
              (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                    39307.89580009271061) * r + 21213.794301586595867) * r +
                  5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
        return val;
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                 4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                 2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                 5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                 0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

} // namespace fc
