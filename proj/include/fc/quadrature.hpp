#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fc {

/// Nodes and weights of a quadrature rule on its natural domain.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1,1]; results are cached per order.
const QuadRule& gauss_legendre(int n);

/// Gauss-Hermite rule for int exp(-x^2) f(x) dx; cached per order.
const QuadRule& gauss_hermite(int n);

/// int_a^b f by Gauss-Legendre of the given order.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int order);

/// Integral over [a,b] split at interior breakpoints, Gauss-Legendre per piece.
/// Doubling the order per piece is used as a stability check; when the two
/// estimates differ by more than rel_tol relatively, *stable is set false.
double integrate_segmented(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, int order,
                           double rel_tol, bool* stable = nullptr);

/// E[f(mean + sd X)], X standard normal. Kinks of f (in payoff coordinates)
/// split the integration range; each finite piece uses Gauss-Legendre of
/// `order` nodes against the Gaussian density, the tails are truncated at
/// 12 standard deviations (linear-growth integrands leave < 1e-30 mass there).
/// Without kinks a single Gauss-Hermite rule of the same order is used.
double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd,
                            std::span<const double> kinks, int order = 64);

} // namespace fc
