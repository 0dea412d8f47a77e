#include "fc/delivery.hpp"

#include <algorithm>
#include <cmath>

#include "fc/errors.hpp"
#include "fc/quadrature.hpp"

namespace fc {

namespace {

// int_a^b e^{-lam z} dz, stable for small lam.
double exp_seg(double a, double b, double lam) {
    if (lam == 0.0) return b - a;
    return std::exp(-lam * a) * (-std::expm1(-lam * (b - a))) / lam;
}

// int_a^b (z - a) e^{-lam z} dz.
double exp_seg_linear(double a, double b, double lam) {
    double d = b - a;
    if (lam == 0.0) return 0.5 * d * d;
    return (exp_seg(a, b, lam) - d * std::exp(-lam * b)) / lam;
}

} // namespace

DeliveryWeight DeliveryWeight::unit(double ell) {
    if (!(ell > 0.0)) throw config_error("DeliveryWeight: ell must be positive");
    DeliveryWeight w;
    w.kind_ = Kind::unit;
    w.ell_ = ell;
    return w;
}

DeliveryWeight DeliveryWeight::uniform(double ell) {
    if (!(ell > 0.0)) throw config_error("DeliveryWeight: ell must be positive");
    DeliveryWeight w;
    w.kind_ = Kind::uniform;
    w.ell_ = ell;
    return w;
}

DeliveryWeight DeliveryWeight::futures_style(double ell, double r) {
    if (!(ell > 0.0)) throw config_error("DeliveryWeight: ell must be positive");
    if (!(r > 0.0)) throw config_error("DeliveryWeight: futures style needs r > 0");
    DeliveryWeight w;
    w.kind_ = Kind::futures_style;
    w.ell_ = ell;
    w.rate_ = r;
    return w;
}

DeliveryWeight DeliveryWeight::tabulated(double ell, std::vector<double> u,
                                         std::vector<double> v) {
    if (!(ell > 0.0)) throw config_error("DeliveryWeight: ell must be positive");
    if (u.size() != v.size() || u.size() < 2)
        throw config_error("DeliveryWeight: tabulated weight needs >= 2 samples");
    if (u.front() != 0.0 || u.back() != ell)
        throw config_error("DeliveryWeight: tabulated samples must span [0, ell]");
    for (size_t i = 0; i < u.size(); ++i) {
        if (i > 0 && u[i] <= u[i - 1])
            throw config_error("DeliveryWeight: tabulated sample points must increase");
        if (!(v[i] > 0.0) || !std::isfinite(v[i]))
            throw config_error("DeliveryWeight: tabulated weight values must be positive");
    }
    DeliveryWeight w;
    w.kind_ = Kind::tabulated;
    w.ell_ = ell;
    w.panels_ = std::move(u);
    w.values_ = std::move(v);
    w.cum_.assign(w.panels_.size(), 0.0);
    for (size_t i = 1; i < w.panels_.size(); ++i)
        w.cum_[i] = w.cum_[i - 1] + 0.5 * (w.values_[i] + w.values_[i - 1]) *
                                        (w.panels_[i] - w.panels_[i - 1]);
    return w;
}

double DeliveryWeight::density(double u) const {
    switch (kind_) {
        case Kind::unit: return 1.0;
        case Kind::uniform: return 1.0 / ell_;
        case Kind::futures_style:
            return rate_ * std::exp(-rate_ * u) / -std::expm1(-rate_ * ell_);
        case Kind::tabulated: {
            double uc = std::clamp(u, panels_.front(), panels_.back());
            auto it = std::upper_bound(panels_.begin(), panels_.end(), uc);
            size_t i = std::min<size_t>(std::max<ptrdiff_t>(1, it - panels_.begin()),
                                        panels_.size() - 1);
            double t = (uc - panels_[i - 1]) / (panels_[i] - panels_[i - 1]);
            return values_[i - 1] + t * (values_[i] - values_[i - 1]);
        }
    }
    return 0.0;
}

double DeliveryWeight::cumulative(double u) const {
    if (u <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::unit: return u;
        case Kind::uniform: return u / ell_;
        case Kind::futures_style:
            return -std::expm1(-rate_ * u) / -std::expm1(-rate_ * ell_);
        case Kind::tabulated: {
            if (u >= panels_.back())
                return cum_.back() + values_.back() * (u - panels_.back());
            auto it = std::upper_bound(panels_.begin(), panels_.end(), u);
            size_t i = std::max<ptrdiff_t>(1, it - panels_.begin());
            double a = panels_[i - 1];
            double wa = values_[i - 1];
            double slope = (values_[i] - values_[i - 1]) / (panels_[i] - panels_[i - 1]);
            double d = u - a;
            return cum_[i - 1] + wa * d + 0.5 * slope * d * d;
        }
    }
    return 0.0;
}

double DeliveryWeight::total() const { return cumulative(ell_); }

double DeliveryWeight::bound() const {
    switch (kind_) {
        case Kind::unit: return 1.0;
        case Kind::uniform: return 1.0 / ell_;
        case Kind::futures_style: return rate_ / -std::expm1(-rate_ * ell_);
        case Kind::tabulated: return *std::max_element(values_.begin(), values_.end());
    }
    return 0.0;
}

double DeliveryWeight::kernel(double x, double y) const {
    double v = y - x;
    if (v < 0.0 || v > ell_) return 0.0;
    return total() - cumulative(v);
}

double DeliveryWeight::seg_w(double a, double b) const { return cumulative(b) - cumulative(a); }

double DeliveryWeight::seg_uw(double a, double b) const {
    switch (kind_) {
        case Kind::unit: return 0.5 * (b - a) * (b - a);
        case Kind::uniform: return 0.5 * (b - a) * (b - a) / ell_;
        case Kind::futures_style:
            return rate_ * exp_seg_linear(a, b, rate_) / -std::expm1(-rate_ * ell_);
        case Kind::tabulated: {
            // w is piecewise linear: integrate (u-a) w(u) panel by panel (exact
            // for the quadratic integrand under 5-point Gauss-Legendre).
            const QuadRule& gl = gauss_legendre(5);
            double s = 0.0;
            double lo = a;
            for (size_t i = 1; i <= panels_.size() && lo < b; ++i) {
                double hi = i < panels_.size() ? std::min(panels_[i], b) : b;
                if (hi <= lo) continue;
                double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                for (size_t q = 0; q < gl.nodes.size(); ++q) {
                    double u = mid + half * gl.nodes[q];
                    s += gl.weights[q] * half * (u - a) * density(u);
                }
                lo = hi;
            }
            return s;
        }
    }
    return 0.0;
}

double DeliveryWeight::seg_q(double a, double b) const {
    double W = total();
    switch (kind_) {
        case Kind::unit:
            return W * (b - a) - 0.5 * (b * b - a * a);
        case Kind::uniform:
            return W * (b - a) - 0.5 * (b * b - a * a) / ell_;
        case Kind::futures_style: {
            double denom = -std::expm1(-rate_ * ell_);
            return (exp_seg(a, b, rate_) - std::exp(-rate_ * ell_) * (b - a)) / denom;
        }
        case Kind::tabulated: {
            const QuadRule& gl = gauss_legendre(5);
            double s = 0.0;
            double lo = a;
            for (size_t i = 1; i <= panels_.size() && lo < b; ++i) {
                double hi = i < panels_.size() ? std::min(panels_[i], b) : b;
                if (hi <= lo) continue;
                double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                for (size_t q = 0; q < gl.nodes.size(); ++q) {
                    double v = mid + half * gl.nodes[q];
                    s += gl.weights[q] * half * (W - cumulative(v));
                }
                lo = hi;
            }
            return s;
        }
    }
    return 0.0;
}

double DeliveryWeight::seg_q_expdecay(double a, double b, double lam) const {
    double W = total();
    switch (kind_) {
        case Kind::unit:
            return W * exp_seg(a, b, lam) -
                   (a * exp_seg(a, b, lam) + exp_seg_linear(a, b, lam));
        case Kind::uniform:
            return W * exp_seg(a, b, lam) -
                   (a * exp_seg(a, b, lam) + exp_seg_linear(a, b, lam)) / ell_;
        case Kind::futures_style: {
            double denom = -std::expm1(-rate_ * ell_);
            double t1 = exp_seg(a, b, rate_ + lam);
            double t2 = std::exp(-rate_ * ell_) * exp_seg(a, b, lam);
            return (t1 - t2) / denom;
        }
        case Kind::tabulated: {
            const QuadRule& gl = gauss_legendre(5);
            double s = 0.0;
            double lo = a;
            for (size_t i = 1; i <= panels_.size() && lo < b; ++i) {
                double hi = i < panels_.size() ? std::min(panels_[i], b) : b;
                if (hi <= lo) continue;
                double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                for (size_t q = 0; q < gl.nodes.size(); ++q) {
                    double v = mid + half * gl.nodes[q];
                    s += gl.weights[q] * half * (W - cumulative(v)) * std::exp(-lam * v);
                }
                lo = hi;
            }
            return s;
        }
    }
    return 0.0;
}

ContractSpec::ContractSpec(double t1, double t2, DeliveryWeight w)
    : T1(t1), T2(t2), weight(std::move(w)) {
    if (!(T1 >= 0.0) || !(T2 > T1))
        throw config_error("ContractSpec: need 0 <= T1 < T2");
    if (std::abs(weight.ell() - (T2 - T1)) > 1e-12 * std::max(1.0, T2))
        throw config_error("ContractSpec: weight ell must equal T2 - T1");
}

namespace {

// Breakpoints of z -> w(z - x) g-cell structure inside [x, x + ell].
std::vector<double> window_breaks(const DeliveryWeight& w, const Curve& g, double x) {
    std::vector<double> pts{x, x + w.ell()};
    auto lo = std::upper_bound(g.knots().begin(), g.knots().end(), x);
    auto hi = std::lower_bound(g.knots().begin(), g.knots().end(), x + w.ell());
    for (auto it = lo; it != hi; ++it) pts.push_back(*it);
    for (double p : w.panel_points()) {
        double z = x + p;
        if (z > x && z < x + w.ell()) pts.push_back(z);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

} // namespace

double eval_D_at(const DeliveryWeight& w, const Curve& g, double x) {
    if (x < 0.0) throw domain_error("eval_D_at: negative maturity");
    std::vector<double> pts = window_breaks(w, g, x);
    double s = 0.0;
    double vp = g(pts.front());
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        double p = pts[i], q = pts[i + 1];
        double d = g.derivative_at(0.5 * (p + q));
        s += vp * w.seg_w(p - x, q - x) + d * w.seg_uw(p - x, q - x);
        vp += d * (q - p);
    }
    return s;
}

double eval_D_deriv_at(const DeliveryWeight& w, const Curve& g, double x) {
    if (x < 0.0) throw domain_error("eval_D_deriv_at: negative maturity");
    std::vector<double> pts = window_breaks(w, g, x);
    double s = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        double p = pts[i], q = pts[i + 1];
        double d = g.derivative_at(0.5 * (p + q));
        s += d * w.seg_w(p - x, q - x);
    }
    return s;
}

Curve apply_D(const DeliveryWeight& w, const Curve& g, const RefinementHint& hint) {
    double hi = g.last_knot();
    if (hi == 0.0) return Curve(g.space(), g.level() * w.total());
    std::vector<double> breaks = g.knots();
    for (double k : g.knots()) {
        double b = k - w.ell();
        if (b > 0.0) breaks.push_back(b);
    }
    for (double k : g.knots())
        for (double p : w.panel_points()) {
            double b = k - p;
            if (b > 0.0 && b < hi) breaks.push_back(b);
        }
    std::vector<double> nodes = refine_nodes(std::move(breaks), hi, hint);
    auto value = [&](double x) { return eval_D_at(w, g, x); };
    auto deriv = [&](double x) { return eval_D_deriv_at(w, g, x); };
    return curve_from_samples(g.space(), nodes, value, deriv);
}

double swap_price(const Curve& g, const ContractSpec& contract, double t) {
    if (t > contract.T1)
        throw domain_error("swap_price: valuation time past delivery start");
    return eval_D_at(contract.weight, g, contract.T1 - t);
}

Curve dual_D_apply_h(const DeliveryWeight& w, AlphaWeight space, double u,
                     const RefinementHint& hint) {
    if (u < 0.0) throw domain_error("dual_D_apply_h: negative maturity");
    const double at = space.alpha_tilde;
    const double W = w.total();
    const double hi = u + w.ell();

    // Cumulative of the kernel term K(x) = int_0^x q(u,z)/alpha(z) dz; the
    // integrand is supported on [u, u + ell].
    auto kernel_cum = [&](double x) {
        double lo = u, cap = std::min(x, hi);
        if (cap <= lo) return 0.0;
        double s = 0.0;
        const std::vector<double>& pp = w.panel_points();
        double a = lo;
        size_t pi = 0;
        while (a < cap) {
            double b = cap;
            while (pi < pp.size() && u + pp[pi] <= a) ++pi;
            if (pi < pp.size()) b = std::min(b, u + pp[pi]);
            // substitute v = z - u: q = W - W(v), weight e^{-at z} = e^{-at u} e^{-at v}
            s += std::exp(-at * u) * w.seg_q_expdecay(a - u, b - u, at);
            a = b;
        }
        return s;
    };
    auto h_val = [&](double x) { return 1.0 + space.inv_mass(0.0, std::min(x, u)); };
    auto value = [&](double x) { return W * h_val(x) + kernel_cum(x); };
    auto deriv = [&](double x) {
        double d = 0.0;
        if (x <= u) d += W * std::exp(-at * x);
        double v = x - u;
        if (v >= 0.0 && v <= w.ell()) d += (W - w.cumulative(v)) * std::exp(-at * x);
        return d;
    };

    std::vector<double> breaks{u, hi};
    for (double p : w.panel_points()) breaks.push_back(u + p);
    RefinementHint h = hint;
    if (h.max_dx <= 0.0) h.max_dx = std::cbrt(std::max(h.tolerance, 1e-14));
    std::vector<double> nodes = refine_nodes(std::move(breaks), hi, h);
    return curve_from_samples(space, nodes, value, deriv);
}

Curve dual_general(const CurveOp& op, const Curve& g, std::span<const double> target_nodes,
                   const RefinementHint& hint) {
    if (target_nodes.size() < 2 || target_nodes.front() != 0.0)
        throw config_error("dual_general: target nodes must start at 0");
    for (size_t j = 1; j < target_nodes.size(); ++j)
        if (!(target_nodes[j] > target_nodes[j - 1]))
            throw config_error("dual_general: target nodes must increase");
    const AlphaWeight space = g.space();

    RefinementHint oph = hint;
    oph.extra_knots.insert(oph.extra_knots.end(), g.knots().begin(), g.knots().end());

    std::vector<double> knots, slopes;
    knots.reserve(2 * (target_nodes.size() - 1));
    slopes.reserve(knots.capacity());
    double anchor = 0.0;
    try {
        anchor = inner_product(g, op(Curve(space, 1.0), oph));
        for (size_t c = 0; c + 1 < target_nodes.size(); ++c) {
            double a = target_nodes[c], b = target_nodes[c + 1];
            double mid = 0.5 * (a + b);
            for (auto [lo, hi] : {std::pair{a, mid}, std::pair{mid, b}}) {
                std::vector<double> ck, cs;
                if (lo > 0.0) {
                    ck = {lo, hi};
                    cs = {0.0, 1.0};
                } else {
                    ck = {hi};
                    cs = {1.0};
                }
                Curve cell(space, 0.0, std::move(ck), std::move(cs));
                double m = inner_product(op(cell, oph), g);
                knots.push_back(hi);
                slopes.push_back(m / space.cell_mass(lo, hi));
            }
        }
    } catch (const std::exception& e) {
        throw numeric_error(std::string("dual_general: operator failed on probe curves: ") +
                            e.what());
    }
    return Curve(space, anchor, std::move(knots), std::move(slopes));
}

double delivery_operator_bound(const DeliveryWeight& w, AlphaWeight space) {
    double W = w.total();
    double c = w.bound();
    double ell = w.ell();
    double k = space.inv_mass(0.0, ell);
    return W + std::sqrt(W * W * (2.0 + k) + 2.0 * c * c * ell * ell);
}

} // namespace fc
