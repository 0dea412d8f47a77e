#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fc/curve.hpp"

namespace fc {

/// Settlement weight family w_ell over a delivery window of length ell.
///
/// Families: unit (temperature/wind indices), uniform (forward-style swaps,
/// 1/ell), futures-style (interest-discounted, r e^{-ru}/(1-e^{-r ell})) and
/// tabulated (piecewise-linear samples). All are positive, bounded and
/// stationary; the delivery-averaging operator built from them is
///   (D g)(x) = int_x^{x+ell} w(y-x) g(y) dy = W(ell) g(x) + int q(x,y) g'(y) dy
/// with W the cumulative weight and q the integration-by-parts kernel.
class DeliveryWeight {
public:
    enum class Kind { unit, uniform, futures_style, tabulated };

    static DeliveryWeight unit(double ell);
    static DeliveryWeight uniform(double ell);
    static DeliveryWeight futures_style(double ell, double r);
    /// Piecewise-linear weight through (u_i, w_i); u must cover [0, ell].
    static DeliveryWeight tabulated(double ell, std::vector<double> u, std::vector<double> w);

    Kind kind() const { return kind_; }
    double ell() const { return ell_; }
    double rate() const { return rate_; }

    /// w(u), u in [0, ell].
    double density(double u) const;

    /// W(u) = int_0^u w, nondecreasing, W(0) = 0.
    double cumulative(double u) const;

    /// W(ell), the identity-part coefficient of the delivery operator.
    double total() const;

    /// Supremum of w over [0, ell].
    double bound() const;

    /// Kernel q(x,y) = (W(ell) - W(y-x)) 1_{[0, ell]}(y-x); the band edge
    /// y - x = ell is included.
    double kernel(double x, double y) const;

    // Exact segment integrals used by the evaluators; [a,b] in w-coordinates.
    double seg_w(double a, double b) const;               // int w
    double seg_uw(double a, double b) const;              // int (u-a) w(u) du
    double seg_q(double a, double b) const;               // int (W(ell)-W(v)) dv, [a,b] in [0,ell]
    double seg_q_expdecay(double a, double b, double lam) const; // int (W(ell)-W(v)) e^{-lam v} dv

    /// Interior breakpoints of the weight (tabulated sample points); empty for
    /// the closed-form families.
    const std::vector<double>& panel_points() const { return panels_; }

private:
    DeliveryWeight() = default;
    Kind kind_ = Kind::uniform;
    double ell_ = 1.0;
    double rate_ = 0.0;                 // futures-style only
    std::vector<double> panels_;        // tabulated sample points
    std::vector<double> values_;        // tabulated weight values
    std::vector<double> cum_;           // tabulated cumulative at sample points
};

/// Delivery period [T1, T2] in calendar time with its settlement weight.
struct ContractSpec {
    double T1 = 0.0;
    double T2 = 1.0;
    DeliveryWeight weight = DeliveryWeight::uniform(1.0);

    ContractSpec(double t1, double t2, DeliveryWeight w);
    double length() const { return T2 - T1; }
};

/// delta_x . D applied to g: the swap value for delivery starting at
/// time-to-maturity x, computed by exact per-cell integration (5-point
/// Gauss-Legendre per tabulation panel for tabulated weights).
double eval_D_at(const DeliveryWeight& w, const Curve& g, double x);

/// Derivative of x -> eval_D_at(w, g, x), exact between grid breakpoints.
double eval_D_deriv_at(const DeliveryWeight& w, const Curve& g, double x);

/// The full image D g as a curve on a refinement of the input grid (input
/// knots, their ell-translates, per-cell panels, plus hint knots).
Curve apply_D(const DeliveryWeight& w, const Curve& g, const RefinementHint& hint = {});

/// Swap price F(t, T1, T2) = (D g)(T1 - t); requires t <= T1.
double swap_price(const Curve& g, const ContractSpec& contract, double t);

/// The dual image D*(h_u): W(ell) h_u(x) + int_0^x q(u,z)/alpha(z) dz,
/// sampled onto a refinement of [0, u + ell].
Curve dual_D_apply_h(const DeliveryWeight& w, AlphaWeight space, double u,
                     const RefinementHint& hint = {});

/// Operator protocol for dual_general: implementations that sample their
/// output (apply_D and friends) must honor the alignment hint; exact
/// operators may ignore it.
using CurveOp = std::function<Curve(const Curve&, const RefinementHint&)>;

/// Dual of an arbitrary bounded operator through the reproducing kernel:
/// (T* g)(0) = <g, T h_0> anchors the level (h_0 is the constant 1), and each
/// target cell carries two slopes recovered from the moments <T c, g> of
/// unit-slope subcell curves c. The adjoint identity <T f, g> = <f, T* g> is
/// then exact to roundoff for any f aligned with `target_nodes`; pointwise
/// values drift at O(dx^2) between nodes, so refine the target grid when
/// values matter.
Curve dual_general(const CurveOp& op, const Curve& g, std::span<const double> target_nodes,
                   const RefinementHint& hint = {});

/// Upper bound on the operator norm of D:
/// W(ell) + sqrt(W(ell)^2 (2 + int_0^ell 1/alpha) + 2 c^2 ell^2), c = sup w.
double delivery_operator_bound(const DeliveryWeight& w, AlphaWeight space);

} // namespace fc
