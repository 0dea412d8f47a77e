#include "fc/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fc/errors.hpp"
#include "fc/normal.hpp"
#include "fc/quadrature.hpp"

namespace fc {

namespace {

// E[(y_ref + slope (X - x_ref)) 1_{a <= X <= b}], X ~ N(mean, sd^2).
double segment_mean(double mean, double sd, double a, double b, double x_ref, double y_ref,
                    double slope) {
    double alpha = (a - mean) / sd;
    double beta = (b - mean) / sd;
    double pa = std::isinf(alpha) ? (alpha < 0 ? 0.0 : 1.0) : norm_cdf(alpha);
    double pb = std::isinf(beta) ? (beta < 0 ? 0.0 : 1.0) : norm_cdf(beta);
    double da = std::isinf(alpha) ? 0.0 : norm_pdf(alpha);
    double db = std::isinf(beta) ? 0.0 : norm_pdf(beta);
    double prob = pb - pa;
    double ex = mean * prob + sd * (da - db);
    return (y_ref - slope * x_ref) * prob + slope * ex;
}

} // namespace

Payoff Payoff::call(double strike) {
    Payoff p;
    p.kind_ = Kind::call;
    p.strike_ = strike;
    return p;
}

Payoff Payoff::put(double strike) {
    Payoff p;
    p.kind_ = Kind::put;
    p.strike_ = strike;
    return p;
}

Payoff Payoff::identity() {
    Payoff p;
    p.kind_ = Kind::identity;
    return p;
}

Payoff Payoff::table(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw config_error("Payoff: table needs >= 2 points");
    for (size_t i = 1; i < xs.size(); ++i)
        if (xs[i] <= xs[i - 1]) throw config_error("Payoff: table abscissae must increase");
    Payoff p;
    p.kind_ = Kind::table;
    p.xs_ = std::move(xs);
    p.ys_ = std::move(ys);
    return p;
}

double Payoff::operator()(double f) const {
    switch (kind_) {
        case Kind::call: return std::max(f - strike_, 0.0);
        case Kind::put: return std::max(strike_ - f, 0.0);
        case Kind::identity: return f;
        case Kind::table: {
            size_t n = xs_.size();
            size_t i;
            if (f <= xs_[0]) i = 0;
            else if (f >= xs_[n - 1]) i = n - 2;
            else i = std::upper_bound(xs_.begin(), xs_.end(), f) - xs_.begin() - 1;
            double slope = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
            return ys_[i] + slope * (f - xs_[i]);
        }
    }
    return 0.0;
}

std::vector<double> Payoff::kinks() const {
    switch (kind_) {
        case Kind::call:
        case Kind::put: return {strike_};
        case Kind::identity: return {};
        case Kind::table: return xs_;
    }
    return {};
}

double Payoff::gaussian_mean(double mean, double sd) const {
    if (sd <= 0.0) return (*this)(mean);
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case Kind::call: return segment_mean(mean, sd, strike_, inf, strike_, 0.0, 1.0);
        case Kind::put: return segment_mean(mean, sd, -inf, strike_, strike_, 0.0, -1.0);
        case Kind::identity: return mean;
        case Kind::table: {
            size_t n = xs_.size();
            double s = 0.0;
            for (size_t i = 0; i + 1 < n; ++i) {
                double a = i == 0 ? -inf : xs_[i];
                double b = i + 2 == n ? inf : xs_[i + 1];
                double slope = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
                s += segment_mean(mean, sd, a, b, xs_[i], ys_[i], slope);
            }
            return s;
        }
    }
    return 0.0;
}

double Payoff::lipschitz() const {
    switch (kind_) {
        case Kind::call:
        case Kind::put:
        case Kind::identity: return 1.0;
        case Kind::table: {
            double m = 0.0;
            for (size_t i = 0; i + 1 < xs_.size(); ++i)
                m = std::max(m, std::abs((ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i])));
            return m;
        }
    }
    return 0.0;
}

double PricingRequest::discount() const { return std::exp(-rate * (tau - t)); }

void PricingRequest::validate_against(double T1) const {
    if (!(t <= tau) || !(tau <= T1))
        throw domain_error("pricing request violates t <= tau <= T1");
}

double m_of_g(const Curve& g, const ContractSpec& contract, double t) {
    return swap_price(g, contract, t);
}

namespace {

// Kink times of s -> (D b)(T1 - s) style integrands on (t, tau).
void add_time_breaks(std::vector<double>& breaks, const Curve& b, double T1, double ell,
                     double t, double tau) {
    for (double k : b.knots()) {
        double s1 = T1 - k;
        if (s1 > t && s1 < tau) breaks.push_back(s1);
        double s2 = T1 + ell - k;
        if (s2 > t && s2 < tau) breaks.push_back(s2);
    }
}

struct LegFunctional {
    const DeliveryWeight* weight = nullptr; // null: fixed-maturity evaluation
    double T1 = 0.0;

    double operator()(const Curve& b, double s) const {
        double x = T1 - s;
        return weight ? eval_D_at(*weight, b, x) : b(x);
    }
    void breaks(std::vector<double>& out, const Curve& b, double t, double tau) const {
        add_time_breaks(out, b, T1, weight ? weight->ell() : 0.0, t, tau);
    }
};

// int_t^tau nu1 nu2 sum_{k,m} W(k,m) (leg1 b1_k)(s) (leg2 b2_m)(s) ds with W
// diagonal (lambdas) or a full cross matrix.
double cross_quadrature(const SigmaSpec& sigma1, const SigmaSpec& sigma2,
                        const std::vector<Curve>& b1, const std::vector<Curve>& b2,
                        const std::function<double(size_t, size_t)>& w,
                        bool diagonal, const LegFunctional& leg1, const LegFunctional& leg2,
                        double t, double tau, int time_nodes, bool* stable) {
    if (tau <= t) {
        if (stable) *stable = true;
        return 0.0;
    }
    std::vector<double> breaks;
    for (const Curve& b : b1) leg1.breaks(breaks, b, t, tau);
    for (const Curve& b : b2) leg2.breaks(breaks, b, t, tau);
    auto integrand = [&](double s) {
        double acc = 0.0;
        if (diagonal) {
            for (size_t k = 0; k < b1.size(); ++k) {
                double wk = w(k, k);
                if (wk != 0.0) acc += wk * leg1(b1[k], s) * leg2(b2[k], s);
            }
        } else {
            std::vector<double> a1(b1.size()), a2(b2.size());
            for (size_t k = 0; k < b1.size(); ++k) a1[k] = leg1(b1[k], s);
            for (size_t m = 0; m < b2.size(); ++m) a2[m] = leg2(b2[m], s);
            for (size_t k = 0; k < b1.size(); ++k)
                for (size_t m = 0; m < b2.size(); ++m) {
                    double wkm = w(k, m);
                    if (wkm != 0.0) acc += wkm * a1[k] * a2[m];
                }
        }
        return sigma1.nu(s) * sigma2.nu(s) * acc;
    };
    return integrate_segmented(integrand, t, tau, breaks, time_nodes, 1e-9, stable);
}

std::vector<Curve> apply_sigma_modes(const SigmaSpec& sigma, const CovOp& q) {
    std::vector<Curve> out;
    out.reserve(q.rank());
    for (const Curve& e : q.modes()) out.push_back(sigma.apply(e));
    return out;
}

} // namespace

double xi_squared(const SigmaSpec& sigma, const CovOp& q, const ContractSpec& contract,
                  double t, double tau, int time_nodes, bool* stable) {
    if (!(t <= tau) || !(tau <= contract.T1))
        throw domain_error("xi_squared: need t <= tau <= T1");
    if (stable) *stable = true;
    if (sigma.is_zero() || tau == t) return 0.0;
    std::vector<Curve> b = apply_sigma_modes(sigma, q);
    LegFunctional leg{&contract.weight, contract.T1};
    double v = cross_quadrature(
        sigma, sigma, b, b, [&](size_t k, size_t) { return q.lambdas()[k]; }, true, leg, leg,
        t, tau, time_nodes, stable);
    return std::max(0.0, v);
}

double price_call_gaussian(double m, double xi, double strike, double disc) {
    if (xi <= 0.0) return disc * std::max(m - strike, 0.0);
    double d = (m - strike) / xi;
    return disc * (xi * norm_pdf(d) + (m - strike) * norm_cdf(d));
}

double price_put_gaussian(double m, double xi, double strike, double disc) {
    // Parity: put = call - disc (m - K).
    return price_call_gaussian(m, xi, strike, disc) - disc * (m - strike);
}

PriceResult price_european_gaussian(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                                    const ContractSpec& contract, const PricingRequest& req,
                                    int quad_order) {
    req.validate_against(contract.T1);
    PriceResult r;
    r.diag.m = m_of_g(g, contract, req.t);
    r.diag.xi2 = xi_squared(sigma, q, contract, req.t, req.tau, 32, &r.diag.quad_stable);
    if (r.diag.xi2 < 0.0) {
        if (r.diag.xi2 < -1e-12) r.diag.degenerate = true; // numerical noise beyond tolerance
        r.diag.xi2 = 0.0;
    }
    double xi = std::sqrt(r.diag.xi2);
    double disc = req.discount();
    const Payoff& p = req.payoff;
    if (xi == 0.0) {
        r.diag.degenerate = true;
        r.price = disc * p(r.diag.m);
        return r;
    }
    switch (p.kind()) {
        case Payoff::Kind::call:
            r.price = price_call_gaussian(r.diag.m, xi, p.strike(), disc);
            break;
        case Payoff::Kind::put:
            r.price = price_put_gaussian(r.diag.m, xi, p.strike(), disc);
            break;
        case Payoff::Kind::identity:
            r.price = disc * r.diag.m;
            break;
        case Payoff::Kind::table: {
            std::vector<double> kinks = p.kinks();
            r.price = disc * gaussian_expectation([&](double f) { return p(f); }, r.diag.m, xi,
                                                  kinks, quad_order);
            break;
        }
    }
    return r;
}

DeltaResult delta_gateaux(const Curve& g, const Curve& h, const SigmaSpec& sigma,
                          const CovOp& q, const ContractSpec& contract,
                          const PricingRequest& req, int quad_order) {
    req.validate_against(contract.T1);
    double m = m_of_g(g, contract, req.t);
    double mh = m_of_g(h, contract, req.t);
    double xi = std::sqrt(xi_squared(sigma, q, contract, req.t, req.tau));
    double disc = req.discount();
    const Payoff& p = req.payoff;
    DeltaResult out;
    if (xi == 0.0) {
        out.degenerate = true;
        switch (p.kind()) {
            case Payoff::Kind::call:
                out.value = disc * mh * (m > p.strike() ? 1.0 : 0.0);
                return out;
            case Payoff::Kind::put:
                out.value = disc * mh * (m < p.strike() ? -1.0 : 0.0);
                return out;
            case Payoff::Kind::identity:
                out.value = disc * mh;
                return out;
            default:
                throw domain_error("delta_gateaux: undefined at zero variance for this payoff");
        }
    }
    switch (p.kind()) {
        case Payoff::Kind::call:
            out.value = disc * mh * norm_cdf((m - p.strike()) / xi);
            return out;
        case Payoff::Kind::put:
            out.value = disc * mh * (norm_cdf((m - p.strike()) / xi) - 1.0);
            return out;
        case Payoff::Kind::identity:
            out.value = disc * mh;
            return out;
        case Payoff::Kind::table: {
            std::vector<double> kinks = p.kinks();
            double e = gaussian_expectation([&](double f) { return p(f) * (f - m) / xi; }, m,
                                            xi, kinks, quad_order);
            out.value = disc * mh / xi * e;
            return out;
        }
    }
    return out;
}

Payoff2D Payoff2D::spread_call(double strike) {
    Payoff2D p;
    p.kind = Kind::spread_call;
    p.strike = strike;
    return p;
}

Payoff2D Payoff2D::diff() {
    Payoff2D p;
    p.kind = Kind::diff;
    return p;
}

Payoff2D Payoff2D::product(Payoff p1, Payoff q1) {
    Payoff2D p;
    p.kind = Kind::product;
    p.p = std::move(p1);
    p.q = std::move(q1);
    return p;
}

Payoff2D Payoff2D::custom(std::function<double(double, double)> fn) {
    Payoff2D p;
    p.kind = Kind::custom;
    p.fn = std::move(fn);
    return p;
}

void GaussianLaw2D::clamp() {
    double scale = std::max({var1, var2, std::abs(cov), 1e-300});
    if (var1 < -1e-12 * scale || var2 < -1e-12 * scale)
        throw numeric_error("GaussianLaw2D: negative variance beyond roundoff");
    var1 = std::max(0.0, var1);
    var2 = std::max(0.0, var2);
    double lim = std::sqrt(var1 * var2);
    if (std::abs(cov) > lim) {
        if (std::abs(cov) > lim + 1e-12 * scale + 1e-300)
            throw numeric_error("GaussianLaw2D: covariance exceeds PSD bound beyond roundoff");
        cov = std::copysign(lim, cov);
    }
}

double expectation_2d(const GaussianLaw2D& law0, const Payoff2D& payoff, int order) {
    GaussianLaw2D law = law0;
    law.clamp();
    switch (payoff.kind) {
        case Payoff2D::Kind::diff:
            return law.mean1 - law.mean2;
        case Payoff2D::Kind::spread_call: {
            // F1 - F2 is itself normal.
            double var = std::max(0.0, law.var1 + law.var2 - 2.0 * law.cov);
            return Payoff::call(payoff.strike).gaussian_mean(law.mean1 - law.mean2,
                                                             std::sqrt(var));
        }
        case Payoff2D::Kind::product: {
            if (law.var1 == 0.0)
                return payoff.p(law.mean1) *
                       payoff.q.gaussian_mean(law.mean2, std::sqrt(law.var2));
            double s1 = std::sqrt(law.var1);
            double beta = law.cov / law.var1;
            double cond_var = std::max(0.0, law.var2 - law.cov * law.cov / law.var1);
            double cond_sd = std::sqrt(cond_var);
            std::vector<double> kinks = payoff.p.kinks();
            auto h = [&](double f1) {
                return payoff.p(f1) *
                       payoff.q.gaussian_mean(law.mean2 + beta * (f1 - law.mean1), cond_sd);
            };
            return gaussian_expectation(h, law.mean1, s1, kinks, order);
        }
        case Payoff2D::Kind::custom: {
            double s1 = std::sqrt(law.var1);
            double l21 = s1 > 0.0 ? law.cov / s1 : 0.0;
            double l22 = std::sqrt(std::max(0.0, law.var2 - l21 * l21));
            const QuadRule& gh = gauss_hermite(order);
            const double sq2 = std::sqrt(2.0);
            double acc = 0.0;
            for (size_t i = 0; i < gh.nodes.size(); ++i) {
                double z1 = sq2 * gh.nodes[i];
                double f1 = law.mean1 + s1 * z1;
                double inner = 0.0;
                for (size_t j = 0; j < gh.nodes.size(); ++j) {
                    double z2 = sq2 * gh.nodes[j];
                    inner += gh.weights[j] * payoff.fn(f1, law.mean2 + l21 * z1 + l22 * z2);
                }
                acc += gh.weights[i] * inner;
            }
            return acc / M_PI;
        }
    }
    return 0.0;
}

PriceResult price_calendar_spread(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                                  const ContractSpec& c1, const ContractSpec& c2,
                                  const Payoff2D& payoff, const PricingRequest& req,
                                  int time_nodes, int quad_order) {
    req.validate_against(std::min(c1.T1, c2.T1));
    GaussianLaw2D law;
    law.mean1 = m_of_g(g, c1, req.t);
    law.mean2 = m_of_g(g, c2, req.t);
    bool st1 = true, st2 = true, st12 = true;
    law.var1 = xi_squared(sigma, q, c1, req.t, req.tau, time_nodes, &st1);
    law.var2 = xi_squared(sigma, q, c2, req.t, req.tau, time_nodes, &st2);
    if (sigma.is_zero()) {
        law.cov = 0.0;
    } else {
        std::vector<Curve> b = apply_sigma_modes(sigma, q);
        LegFunctional leg1{&c1.weight, c1.T1};
        LegFunctional leg2{&c2.weight, c2.T1};
        law.cov = cross_quadrature(
            sigma, sigma, b, b, [&](size_t k, size_t) { return q.lambdas()[k]; }, true, leg1,
            leg2, req.t, req.tau, time_nodes, &st12);
    }
    PriceResult r;
    r.diag = {law.mean1, law.var1, law.mean2, law.var2, law.cov, st1 && st2 && st12, false,
              0.0, 0.0};
    r.price = req.discount() * expectation_2d(law, payoff, quad_order);
    return r;
}

double black76_variance(const SigmaSpec& sigma, const CovOp& q, double T, double t, double tau,
                        int time_nodes, bool* stable) {
    if (!(t <= tau) || !(tau <= T)) throw domain_error("black76_variance: need t <= tau <= T");
    if (stable) *stable = true;
    if (sigma.is_zero() || tau == t) return 0.0;
    std::vector<Curve> b = apply_sigma_modes(sigma, q);
    LegFunctional leg{nullptr, T};
    double v = cross_quadrature(
        sigma, sigma, b, b, [&](size_t k, size_t) { return q.lambdas()[k]; }, true, leg, leg,
        t, tau, time_nodes, stable);
    return std::max(0.0, v);
}

double price_call_black76(double forward, double strike, double total_var, double disc) {
    if (!(forward > 0.0) || !(strike > 0.0))
        throw domain_error("price_call_black76: forward and strike must be positive");
    if (total_var < 0.0) {
        if (total_var < -1e-12) throw domain_error("price_call_black76: negative variance");
        total_var = 0.0;
    }
    if (total_var == 0.0) return disc * std::max(forward - strike, 0.0);
    double v = std::sqrt(total_var);
    double d1 = (std::log(forward / strike) + 0.5 * total_var) / v;
    return disc * (forward * norm_cdf(d1) - strike * norm_cdf(d1 - v));
}

double sigma12_integral(const SigmaSpec& sigma1, const SigmaSpec& sigma2, const BlockCov& block,
                        double T, double t, double tau, int time_nodes) {
    if (!(t <= tau) || !(tau <= T)) throw domain_error("sigma12_integral: need t <= tau <= T");
    std::vector<Curve> b1 = apply_sigma_modes(sigma1, block.q1);
    std::vector<Curve> b2 = apply_sigma_modes(sigma2, block.q2);
    LegFunctional leg{nullptr, T};
    return cross_quadrature(
        sigma1, sigma2, b1, b2, [&](size_t k, size_t m) { return block.c(k, m); }, false, leg,
        leg, t, tau, time_nodes, nullptr);
}

double price_margrabe(double f1, double f2, double sigma2_total, double disc) {
    if (!(f1 > 0.0) || !(f2 > 0.0))
        throw domain_error("price_margrabe: forwards must be positive");
    if (sigma2_total < 0.0) {
        if (sigma2_total < -1e-12) throw domain_error("price_margrabe: negative spread variance");
        sigma2_total = 0.0;
    }
    if (sigma2_total == 0.0) return disc * std::max(f1 - f2, 0.0);
    double s = std::sqrt(sigma2_total);
    double dp = (std::log(f1 / f2) + 0.5 * sigma2_total) / s;
    double dm = (std::log(f1 / f2) - 0.5 * sigma2_total) / s;
    return disc * (f1 * norm_cdf(dp) - f2 * norm_cdf(dm));
}

PriceResult price_quanto(const Curve& g1, const Curve& g2, const SigmaSpec& sigma1,
                         const SigmaSpec& sigma2, const BlockCov& block,
                         const ContractSpec& c1, const ContractSpec& c2, const Payoff& p,
                         const Payoff& q, const PricingRequest& req, int time_nodes,
                         int quad_order) {
    req.validate_against(std::min(c1.T1, c2.T1));
    BlockReport rep = validate_block(block);
    if (!rep.valid) throw config_error("price_quanto: invalid block covariance: " + rep.reason);

    GaussianLaw2D law;
    law.mean1 = m_of_g(g1, c1, req.t);
    law.mean2 = m_of_g(g2, c2, req.t);
    bool st1 = true, st2 = true;
    law.var1 = xi_squared(sigma1, block.q1, c1, req.t, req.tau, time_nodes, &st1);
    law.var2 = xi_squared(sigma2, block.q2, c2, req.t, req.tau, time_nodes, &st2);
    std::vector<Curve> b1 = apply_sigma_modes(sigma1, block.q1);
    std::vector<Curve> b2 = apply_sigma_modes(sigma2, block.q2);
    LegFunctional leg1{&c1.weight, c1.T1};
    LegFunctional leg2{&c2.weight, c2.T1};
    law.cov = cross_quadrature(
        sigma1, sigma2, b1, b2, [&](size_t k, size_t m) { return block.c(k, m); }, false, leg1,
        leg2, req.t, req.tau, time_nodes, nullptr);

    PriceResult r;
    r.diag = {law.mean1, law.var1, law.mean2, law.var2, law.cov, st1 && st2, false, 0.0, 0.0};
    r.price = req.discount() * expectation_2d(law, Payoff2D::product(p, q), quad_order);
    return r;
}

namespace {

// NIG exponent of the subordinated motion: log E[e^{z L(1)}],
// L = B(U), U(1) ~ IG(delta, gamma); analytic on |Re z| < gamma.
std::complex<double> nig_exponent(std::complex<double> z, double delta, double gamma) {
    std::complex<double> rad = gamma * gamma - z * z;
    return delta * (gamma - std::sqrt(rad));
}

} // namespace

PriceResult price_call_nig(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                           double ig_delta, double ig_gamma, const ContractSpec& contract,
                           const PricingRequest& req, double damping, int grid_points,
                           int time_nodes) {
    req.validate_against(contract.T1);
    if (!(ig_delta > 0.0) || !(ig_gamma > 0.0))
        throw config_error("price_call_nig: need ig_delta, ig_gamma > 0");
    if (req.payoff.kind() != Payoff::Kind::call)
        throw config_error("price_call_nig: call payoff expected");

    PriceResult r;
    r.diag.m = m_of_g(g, contract, req.t);
    const double disc = req.discount();
    const double strike = req.payoff.strike();

    // Quadrature representation of s -> sigma~(s) over [t, tau].
    std::vector<Curve> b = apply_sigma_modes(sigma, q);
    std::vector<double> breaks;
    for (const Curve& bc : b)
        add_time_breaks(breaks, bc, contract.T1, contract.weight.ell(), req.t, req.tau);
    std::vector<double> pts{req.t, req.tau};
    for (double s : breaks)
        if (s > req.t && s < req.tau) pts.push_back(s);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    const QuadRule& gl = gauss_legendre(time_nodes);
    std::vector<double> qw, st;
    for (size_t seg = 0; seg + 1 < pts.size(); ++seg) {
        double mid = 0.5 * (pts[seg] + pts[seg + 1]);
        double half = 0.5 * (pts[seg + 1] - pts[seg]);
        for (size_t i = 0; i < gl.nodes.size(); ++i) {
            double s = mid + half * gl.nodes[i];
            double acc = 0.0;
            for (size_t k = 0; k < b.size(); ++k) {
                double a = eval_D_at(contract.weight, b[k], contract.T1 - s);
                acc += q.lambdas()[k] * a * a;
            }
            double nu = sigma.nu(s);
            qw.push_back(gl.weights[i] * half);
            st.push_back(std::abs(nu) * std::sqrt(std::max(0.0, acc)));
        }
    }
    double xi2 = 0.0, st_max = 0.0;
    for (size_t i = 0; i < qw.size(); ++i) {
        xi2 += qw[i] * st[i] * st[i];
        st_max = std::max(st_max, st[i]);
    }
    r.diag.xi2 = xi2;
    const double mean_u = ig_delta / ig_gamma;
    const double sd_x = std::sqrt(std::max(mean_u * xi2, 1e-300));

    if (st_max == 0.0 || xi2 == 0.0) {
        r.diag.degenerate = true;
        r.price = disc * std::max(r.diag.m - strike, 0.0);
        return r;
    }

    const double a_limit = ig_gamma / st_max;
    double a = damping > 0.0 ? damping : std::min(1.5 / sd_x, 0.5 * a_limit);
    r.diag.fourier_damping = a;
    if (!(a > 0.0) || a >= a_limit)
        throw numeric_error("price_call_nig: damping outside the admissible strip (0, " +
                            std::to_string(a_limit) + ")");

    auto cumulant = [&](std::complex<double> z) {
        std::complex<double> acc = 0.0;
        for (size_t i = 0; i < qw.size(); ++i)
            acc += qw[i] * nig_exponent(z * st[i], ig_delta, ig_gamma);
        return acc;
    };

    // Price the out-of-the-money side in centered strike coordinates and put
    // the intrinsic part back by parity.
    const double k = strike - r.diag.m;
    const double side = k >= 0.0 ? 1.0 : -1.0; // +1: call transform, -1: put transform
    auto transform = [&](double v) {
        std::complex<double> w(side * a, v);
        std::complex<double> ph = std::exp(std::complex<double>(0.0, -v * k) + cumulant(w));
        return (ph / (w * w)).real();
    };

    double v_max = 64.0 / sd_x;
    double ref = std::abs(transform(0.0)) + 1e-300;
    int guard = 0;
    while (std::abs(transform(v_max)) > 1e-13 * ref && guard++ < 40) v_max *= 2.0;
    r.diag.fourier_vmax = v_max;

    // Simpson on grid_points intervals.
    int n = std::max(16, grid_points);
    if (n % 2 == 1) ++n;
    double h = v_max / n;
    double acc = transform(0.0) + transform(v_max);
    for (int i = 1; i < n; ++i) acc += transform(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    double integral = acc * h / 3.0;

    double otm = std::exp(-a * std::abs(k)) / M_PI * integral; // E[(X-k)^+] or E[(k-X)^+]
    double call = k >= 0.0 ? otm : otm - k;
    r.price = disc * call;
    return r;
}

double lipschitz_certificate(const SigmaSpec& sigma, const CovOp& q, double tau,
                             double payoff_lipschitz, const ContractSpec& contract,
                             AlphaWeight space) {
    double delta_sup = std::sqrt(1.0 + space.inv_mass());
    double cp = payoff_lipschitz * delta_sup * delivery_operator_bound(contract.weight, space);
    double c = space.shift_bound_sq();
    double kt = sigma.op_bound(0.0, tau);
    return cp * std::sqrt(2.0 * c) * std::exp(2.0 * c * kt * kt * q.trace() * tau);
}

} // namespace fc
