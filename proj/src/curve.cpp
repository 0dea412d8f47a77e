#include "fc/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fc/errors.hpp"
#include "fc/quadrature.hpp"

namespace fc {

namespace {

void trim_trailing_zero_slopes(std::vector<double>& knots, std::vector<double>& slopes) {
    while (!slopes.empty() && slopes.back() == 0.0) {
        slopes.pop_back();
        knots.pop_back();
    }
}

} // namespace

Curve::Curve(AlphaWeight space, double level, std::vector<double> knots,
             std::vector<double> slopes)
    : space_(space), level_(level), knots_(std::move(knots)), slopes_(std::move(slopes)) {
    if (knots_.size() != slopes_.size())
        throw config_error("Curve: knots and slopes must have equal length");
    if (!std::isfinite(level_)) throw config_error("Curve: non-finite level");
    double prev = 0.0;
    for (size_t i = 0; i < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i]) || !std::isfinite(slopes_[i]))
            throw config_error("Curve: non-finite knot or slope");
        if (knots_[i] <= prev)
            throw config_error("Curve: knots must be strictly increasing and positive");
        prev = knots_[i];
    }
    trim_trailing_zero_slopes(knots_, slopes_);
    node_values_.resize(knots_.size());
    double v = level_;
    prev = 0.0;
    for (size_t i = 0; i < knots_.size(); ++i) {
        v += slopes_[i] * (knots_[i] - prev);
        node_values_[i] = v;
        prev = knots_[i];
    }
}

double Curve::operator()(double x) const {
    if (x < 0.0) throw domain_error("Curve: evaluation at negative maturity");
    if (knots_.empty() || x >= knots_.back()) return knots_.empty() ? level_ : node_values_.back();
    size_t i = std::lower_bound(knots_.begin(), knots_.end(), x) - knots_.begin();
    double left = i == 0 ? level_ : node_values_[i - 1];
    double prev = i == 0 ? 0.0 : knots_[i - 1];
    return left + slopes_[i] * (x - prev);
}

double Curve::derivative_at(double x) const {
    if (x < 0.0) throw domain_error("Curve: derivative at negative maturity");
    if (knots_.empty() || x > knots_.back()) return 0.0;
    size_t i = std::lower_bound(knots_.begin(), knots_.end(), x) - knots_.begin();
    return slopes_[i];
}

double inner_product(const Curve& f, const Curve& g) {
    if (f.space() != g.space())
        throw config_error("inner_product: curves live in different weighted spaces");
    const AlphaWeight& w = f.space();
    double s = f.level() * g.level();

    const auto& fk = f.knots();
    const auto& gk = g.knots();
    size_t i = 0, j = 0;
    double prev = 0.0;
    while (i < fk.size() && j < gk.size()) {
        double next = std::min(fk[i], gk[j]);
        s += f.slopes()[i] * g.slopes()[j] * w.cell_mass(prev, next);
        if (fk[i] == next) ++i;
        if (gk[j] == next) ++j;
        prev = next;
    }
    return s;
}

double norm(const Curve& g) { return std::sqrt(std::max(0.0, inner_product(g, g))); }

Curve combine(double a, const Curve& f, double b, const Curve& g) {
    if (f.space() != g.space())
        throw config_error("combine: curves live in different weighted spaces");
    std::vector<double> knots, slopes;
    knots.reserve(f.knots().size() + g.knots().size());
    slopes.reserve(knots.capacity());
    size_t i = 0, j = 0;
    while (i < f.knots().size() || j < g.knots().size()) {
        double df = i < f.knots().size() ? f.slopes()[i] : 0.0;
        double dg = j < g.knots().size() ? g.slopes()[j] : 0.0;
        double kf = i < f.knots().size() ? f.knots()[i] : std::numeric_limits<double>::infinity();
        double kg = j < g.knots().size() ? g.knots()[j] : std::numeric_limits<double>::infinity();
        double next = std::min(kf, kg);
        knots.push_back(next);
        slopes.push_back(a * df + b * dg);
        if (kf == next) ++i;
        if (kg == next) ++j;
    }
    return Curve(f.space(), a * f.level() + b * g.level(), std::move(knots), std::move(slopes));
}

Curve scale(double a, const Curve& f) {
    std::vector<double> slopes = f.slopes();
    for (double& d : slopes) d *= a;
    return Curve(f.space(), a * f.level(), f.knots(), std::move(slopes));
}

Curve shift(const Curve& g, double x) {
    if (x < 0.0) throw domain_error("shift: negative shift");
    if (x == 0.0) return g;
    double level = g(x);
    std::vector<double> knots, slopes;
    for (size_t i = 0; i < g.knots().size(); ++i) {
        if (g.knots()[i] > x) {
            knots.push_back(g.knots()[i] - x);
            slopes.push_back(g.slopes()[i]);
        }
    }
    return Curve(g.space(), level, std::move(knots), std::move(slopes));
}

std::vector<double> refine_nodes(std::vector<double> breakpoints, double hi,
                                 const RefinementHint& hint) {
    std::vector<double> pts;
    pts.push_back(0.0);
    pts.push_back(hi);
    for (double b : breakpoints)
        if (b > 0.0 && b < hi) pts.push_back(b);
    for (double b : hint.extra_knots)
        if (b > 0.0 && b < hi) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double dedupe = 1e-12 * std::max(1.0, hi);
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [&](double a, double b) { return b - a < dedupe; }),
              pts.end());
    if (pts.back() < hi) pts.back() = hi;

    double dx = hint.max_dx > 0.0 ? hint.max_dx : std::numeric_limits<double>::infinity();
    std::vector<double> out;
    out.reserve(pts.size() * std::max(2, hint.panels_per_cell));
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        double a = pts[i], b = pts[i + 1];
        int panels = std::max(1, hint.panels_per_cell);
        panels = std::max<int>(panels, static_cast<int>(std::ceil((b - a) / dx)));
        panels = std::min(panels, 100000);
        for (int p = 0; p < panels; ++p) out.push_back(a + (b - a) * p / panels);
    }
    out.push_back(pts.back());
    return out;
}

Curve curve_from_values_and_moments(AlphaWeight space, std::span<const double> nodes,
                                    std::span<const double> values,
                                    std::span<const double> moments) {
    if (nodes.empty() || nodes.front() != 0.0)
        throw config_error("curve_from_samples: nodes must start at 0");
    if (values.size() != nodes.size() || moments.size() + 1 != nodes.size())
        throw config_error("curve_from_samples: inconsistent sample sizes");

    std::vector<double> knots, slopes;
    knots.reserve(2 * moments.size());
    slopes.reserve(2 * moments.size());
    const double at = space.alpha_tilde;
    for (size_t c = 0; c < moments.size(); ++c) {
        double a = nodes[c], b = nodes[c + 1];
        double width = b - a;
        double mid = 0.5 * (a + b);
        double dv = values[c + 1] - values[c];
        double davg = dv / width;
        double a1 = space.cell_mass(a, mid);
        double a2 = space.cell_mass(mid, b);
        // a2 - a1 = exp(at*mid) * (2 cosh(at*width/2) - 2) / at, kept in expm1 form.
        double h = 0.5 * at * width;
        double gap = std::exp(at * mid) * (std::expm1(h) + std::expm1(-h)) / at;
        double r = std::fma(-davg, a1 + a2, moments[c]);
        double corr = r / gap;
        knots.push_back(mid);
        slopes.push_back(davg - corr);
        knots.push_back(b);
        slopes.push_back(davg + corr);
    }
    return Curve(space, values.empty() ? 0.0 : values[0], std::move(knots), std::move(slopes));
}

Curve curve_from_samples(AlphaWeight space, std::span<const double> nodes,
                         const std::function<double(double)>& value,
                         const std::function<double(double)>& derivative) {
    std::vector<double> values(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) values[i] = value(nodes[i]);
    const QuadRule& gl = gauss_legendre(5);
    std::vector<double> moments(nodes.empty() ? 0 : nodes.size() - 1);
    for (size_t c = 0; c + 1 < nodes.size(); ++c) {
        double a = nodes[c], b = nodes[c + 1];
        double midc = 0.5 * (a + b), half = 0.5 * (b - a);
        double m = 0.0;
        for (size_t q = 0; q < gl.nodes.size(); ++q) {
            double u = midc + half * gl.nodes[q];
            m += gl.weights[q] * space.alpha(u) * derivative(u);
        }
        moments[c] = m * half;
    }
    return curve_from_values_and_moments(space, nodes, values, moments);
}

Curve h_curve(AlphaWeight space, double x, const RefinementHint& hint) {
    if (x < 0.0) throw domain_error("h_curve: negative maturity");
    if (x == 0.0) return Curve(space, 1.0);
    const double at = space.alpha_tilde;
    auto value = [&](double y) { return 1.0 + space.inv_mass(0.0, std::min(y, x)); };
    auto deriv = [&](double y) { return y <= x ? std::exp(-at * y) : 0.0; };
    RefinementHint h = hint;
    if (h.max_dx <= 0.0) h.max_dx = std::cbrt(std::max(h.tolerance, 1e-14));
    std::vector<double> nodes = refine_nodes({x}, x, h);
    return curve_from_samples(space, nodes, value, deriv);
}

Curve exp_curve(const Curve& g, const RefinementHint& hint) {
    double hi = g.last_knot();
    if (hi == 0.0) {
        double v = g.level();
        if (v > 700.0) throw numeric_error("exp_curve: overflow");
        return Curve(g.space(), std::exp(v));
    }
    // Overflow screen at the extreme candidates: knots and endpoints.
    double vmax = std::max(g.level(), g(hi));
    for (double k : g.knots()) vmax = std::max(vmax, g(k));
    if (vmax > 700.0) throw numeric_error("exp_curve: overflow");

    auto value = [&](double y) { return std::exp(g(y)); };
    auto deriv = [&](double y) { return g.derivative_at(y) * std::exp(g(y)); };
    std::vector<double> nodes = refine_nodes(g.knots(), hi, hint);
    return curve_from_samples(g.space(), nodes, value, deriv);
}

Basis::Basis(std::vector<Curve> elements) : elements_(std::move(elements)) {
    for (size_t i = 0; i < elements_.size(); ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double ip = inner_product(elements_[i], elements_[j]);
            double want = i == j ? 1.0 : 0.0;
            if (std::abs(ip - want) > 1e-10)
                throw config_error("Basis: elements are not orthonormal");
        }
    }
}

Curve project(const Curve& g, const Basis& basis, size_t n) {
    if (n > basis.size()) throw domain_error("project: rank exceeds basis size");
    Curve acc(g.space(), 0.0);
    for (size_t k = 0; k < n; ++k) {
        double c = inner_product(g, basis.elements()[k]);
        acc = combine(1.0, acc, c, basis.elements()[k]);
    }
    return acc;
}

Basis gram_schmidt(std::span<const Curve> raw, double drop_tol) {
    std::vector<Curve> out;
    for (const Curve& c : raw) {
        Curve v = c;
        for (const Curve& e : out) v = combine(1.0, v, -inner_product(v, e), e);
        double n = norm(v);
        if (n <= drop_tol * std::max(1.0, norm(c)))
            throw config_error("gram_schmidt: input curves are (near-)linearly dependent");
        out.push_back(scale(1.0 / n, v));
    }
    return Basis(std::move(out));
}

} // namespace fc
