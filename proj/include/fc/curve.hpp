#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fc/weight.hpp"

namespace fc {

/// Grid control for operator outputs and re-interpolated constructions.
///
/// Knots listed in `extra_knots` are included verbatim in the output grid.
/// Bilinear identities (reproducing property, adjoint relations) are exact to
/// roundoff against curves whose knots are all contained in the output grid;
/// against unaligned knots the error degrades to O(dx^{3/2}) per crossing.
struct RefinementHint {
    std::vector<double> extra_knots;
    int panels_per_cell = 8;
    double max_dx = 0.0;      // 0: derived from tolerance
    double tolerance = 1e-8;  // tol_h / tol_op target for constructions
};

/// Element of the weighted curve space: value at 0 plus a piecewise-constant
/// derivative on a finite grid, constant beyond the last knot.
///
/// Immutable after construction; all operations below are pure.
class Curve {
public:
    Curve(AlphaWeight space, double level) : space_(space), level_(level) {}
    Curve(AlphaWeight space, double level, std::vector<double> knots, std::vector<double> slopes);

    const AlphaWeight& space() const { return space_; }
    double level() const { return level_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& slopes() const { return slopes_; }
    bool is_constant() const { return knots_.empty(); }
    double last_knot() const { return knots_.empty() ? 0.0 : knots_.back(); }

    /// Point evaluation g(x), x >= 0; constant beyond the last knot.
    double operator()(double x) const;

    /// Derivative on the cell containing x (cells are half-open on the left);
    /// 0 beyond the last knot.
    double derivative_at(double x) const;

private:
    AlphaWeight space_;
    double level_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> slopes_;
    std::vector<double> node_values_; // curve value at each knot
};

/// <f,g> = f(0)g(0) + int alpha f'g'; exact (grids are merged, every cell
/// integral closes analytically). Throws config_error on mismatched spaces.
double inner_product(const Curve& f, const Curve& g);

double norm(const Curve& g);

/// a*f + b*g on the merged grid.
Curve combine(double a, const Curve& f, double b, const Curve& g);

Curve scale(double a, const Curve& f);

/// Right shift (S_x g)(y) = g(x+y); exact on the representation.
Curve shift(const Curve& g, double x);

/// Reproducing element h_x with h_x(y) = 1 + int_0^{min(x,y)} 1/alpha, sampled
/// onto a refinement of [0,x]. <g, h_curve(x)> recovers g(x) exactly for any
/// g whose knots lie on the output grid (use hint.extra_knots to align).
Curve h_curve(AlphaWeight space, double x, const RefinementHint& hint = {});

/// Pointwise exponential exp(g), re-interpolated. Throws numeric_error when
/// exp overflows.
Curve exp_curve(const Curve& g, const RefinementHint& hint = {});

/// Ordered orthonormal system; orthonormality is validated at construction
/// (pairwise inner products within 1e-10 of the identity).
struct Basis {
    explicit Basis(std::vector<Curve> elements);
    const std::vector<Curve>& elements() const { return elements_; }
    size_t size() const { return elements_.size(); }

private:
    std::vector<Curve> elements_;
};

/// Projection onto the span of the first n basis elements.
Curve project(const Curve& g, const Basis& basis, size_t n);

/// Gram-Schmidt under the space inner product; near-dependent inputs are
/// rejected (relative norm below drop_tol).
Basis gram_schmidt(std::span<const Curve> raw, double drop_tol = 1e-10);

/// Builds a curve matching `value` at every node and the alpha-weighted
/// derivative moment int alpha * derivative on every cell (5-point
/// Gauss-Legendre per cell). Each cell carries two slopes so that both the
/// value increment and the moment are reproduced; nodes must start at 0.
Curve curve_from_samples(AlphaWeight space, std::span<const double> nodes,
                         const std::function<double(double)>& value,
                         const std::function<double(double)>& derivative);

/// Same construction from precomputed node values and per-cell moments.
Curve curve_from_values_and_moments(AlphaWeight space, std::span<const double> nodes,
                                    std::span<const double> values,
                                    std::span<const double> moments);

/// Sorted union of breakpoints, extra knots and per-cell panel subdivisions
/// over [0, hi]; deduplicates within a relative tolerance.
std::vector<double> refine_nodes(std::vector<double> breakpoints, double hi,
                                 const RefinementHint& hint);

} // namespace fc
