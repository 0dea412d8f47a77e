#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fc/covariance.hpp"
#include "fc/delivery.hpp"

namespace fc {

/// Piecewise-linear payoff of linear growth. Tables extrapolate their end
/// segments linearly.
class Payoff {
public:
    enum class Kind { call, put, identity, table };

    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff identity();
    static Payoff table(std::vector<double> xs, std::vector<double> ys);

    Kind kind() const { return kind_; }
    double strike() const { return strike_; }
    double operator()(double f) const;

    /// Kink locations (payoff coordinates), used for quadrature splitting.
    std::vector<double> kinks() const;

    /// E[p(F)], F ~ N(mean, sd^2); closed form segment by segment.
    double gaussian_mean(double mean, double sd) const;

    /// Lipschitz constant of the payoff.
    double lipschitz() const;

private:
    Kind kind_ = Kind::call;
    double strike_ = 0.0;
    std::vector<double> xs_, ys_;
};

/// Exercise and discounting data shared by the pricers.
struct PricingRequest {
    double t = 0.0;
    double tau = 0.0;
    double rate = 0.0;
    Payoff payoff = Payoff::call(0.0);

    double discount() const;
    void validate_against(double T1) const; // enforces t <= tau <= T1
};

struct PriceDiagnostics {
    double m = 0.0;
    double xi2 = 0.0;
    double m2 = 0.0;      // second leg, spread/quanto
    double xi2_2 = 0.0;   // second leg variance
    double cov = 0.0;     // cross covariance
    bool quad_stable = true;
    bool degenerate = false;
    double fourier_damping = 0.0;
    double fourier_vmax = 0.0;
};

struct PriceResult {
    double price = 0.0;
    PriceDiagnostics diag;
};

/// Forward functional m(g) = (delta_{T1-t} . D)(g); identical to swap_price.
double m_of_g(const Curve& g, const ContractSpec& contract, double t);

/// Realized variance of the swap functional over [t, tau]:
/// int_t^tau sum_k lambda_k (nu(s) (D sigma(e_k))(T1 - s))^2 ds,
/// Gauss-Legendre in s split at the integrand's kink times, with an
/// order-doubling stability check reported through *stable.
double xi_squared(const SigmaSpec& sigma, const CovOp& q, const ContractSpec& contract,
                  double t, double tau, int time_nodes = 32, bool* stable = nullptr);

/// Bachelier-type closed form disc * (xi phi(d) + (m - K) Phi(d)), d = (m-K)/xi;
/// falls back to discounted intrinsic value when xi <= 0.
double price_call_gaussian(double m, double xi, double strike, double disc);
double price_put_gaussian(double m, double xi, double strike, double disc);

/// European price under the arithmetic Gaussian model,
/// disc * E[p(m(g) + xi X)]. Calls and puts use the closed form; tables go
/// through kink-split Gaussian quadrature.
PriceResult price_european_gaussian(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                                    const ContractSpec& contract, const PricingRequest& req,
                                    int quad_order = 64);

struct DeltaResult {
    double value = 0.0;
    bool degenerate = false; // xi = 0 handled by the intrinsic indicator
};

/// Directional derivative of the discounted price along the curve h:
/// disc * m(h)/xi * E[p(m + xi X) X]; calls reduce to disc * m(h) * Phi(d).
/// Throws domain_error at xi = 0 for payoffs other than call/put.
DeltaResult delta_gateaux(const Curve& g, const Curve& h, const SigmaSpec& sigma,
                          const CovOp& q, const ContractSpec& contract,
                          const PricingRequest& req, int quad_order = 64);

/// Payoff on two forwards.
struct Payoff2D {
    enum class Kind { spread_call, diff, product, custom };
    Kind kind = Kind::spread_call;
    double strike = 0.0;                        // spread_call: (F1 - F2 - K)^+
    Payoff p = Payoff::identity();              // product: p(F1) q(F2)
    Payoff q = Payoff::identity();
    std::function<double(double, double)> fn;   // custom

    static Payoff2D spread_call(double strike = 0.0);
    static Payoff2D diff();
    static Payoff2D product(Payoff p, Payoff q);
    static Payoff2D custom(std::function<double(double, double)> fn);
};

/// Bivariate Gaussian law of the two leg forwards at exercise.
struct GaussianLaw2D {
    double mean1 = 0.0, mean2 = 0.0;
    double var1 = 0.0, var2 = 0.0, cov = 0.0;

    /// Symmetrized PSD repair for roundoff; complains beyond -1e-12.
    void clamp();
};

/// E[payoff(F1, F2)] under the law. Spread calls collapse to the univariate
/// normal of the difference; products integrate the exact conditional mean of
/// the second leg against kink-split quadrature in the first; custom payoffs
/// use a tensor Gauss-Hermite rule.
double expectation_2d(const GaussianLaw2D& law, const Payoff2D& payoff, int order = 64);

/// Calendar spread on two delivery periods of the same commodity. The 2x2
/// covariance pairs the two delivery functionals through the shared noise.
PriceResult price_calendar_spread(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                                  const ContractSpec& c1, const ContractSpec& c2,
                                  const Payoff2D& payoff, const PricingRequest& req,
                                  int time_nodes = 32, int quad_order = 64);

/// Total log-variance int_t^tau nu(s)^2 sum_k lambda_k (sigma(e_k)(T-s))^2 ds
/// of a fixed-maturity forward under the geometric model.
double black76_variance(const SigmaSpec& sigma, const CovOp& q, double T, double t, double tau,
                        int time_nodes = 32, bool* stable = nullptr);

/// Black-76 call on a fixed-maturity forward of the geometric model.
double price_call_black76(double forward, double strike, double total_var, double disc);

/// Cross-term int_t^tau nu1 nu2 sum_{k,m} C(k,m) (s1 e_k)(T-s) (s2 e_m)(T-s) ds
/// entering the spread variance Sigma^2 = int (s1^2 - 2 s12 + s2^2).
double sigma12_integral(const SigmaSpec& sigma1, const SigmaSpec& sigma2, const BlockCov& block,
                        double T, double t, double tau, int time_nodes = 32);

/// Margrabe exchange option disc * (f1 Phi(d+) - f2 Phi(d-)),
/// d+- = (ln(f1/f2) +- Sigma2/2) / Sigma.
double price_margrabe(double f1, double f2, double sigma2_total, double disc);

/// Energy quanto option disc * E[p(F1) q(F2)] on two delivery contracts of a
/// validated bivariate Gaussian model. Pass identity volatilities for the
/// plain block-noise setting; general SigmaSpec pairs are supported as an
/// extension of the same quadratures.
PriceResult price_quanto(const Curve& g1, const Curve& g2, const SigmaSpec& sigma1,
                         const SigmaSpec& sigma2, const BlockCov& block,
                         const ContractSpec& c1, const ContractSpec& c2, const Payoff& p,
                         const Payoff& q, const PricingRequest& req, int time_nodes = 32,
                         int quad_order = 64);

/// NIG (subordinated-Brownian) call on the arithmetic model, priced by damped
/// Fourier inversion over the centered underlying. `damping` 0 picks
/// min(1.5 / sd, 0.5 gamma / sup sigma~); values outside the admissible strip
/// raise numeric_error naming the strip. The inversion uses a 2^12-point
/// Simpson grid with an adaptive frequency cutoff.
PriceResult price_call_nig(const Curve& g, const SigmaSpec& sigma, const CovOp& q,
                           double ig_delta, double ig_gamma, const ContractSpec& contract,
                           const PricingRequest& req, double damping = 0.0,
                           int grid_points = 4096, int time_nodes = 32);

/// Explicit stability constant C with
/// sup_{t<=tau} |V(t,g) - V(t,g~)| <= C ||g - g~||:
/// C = C_P sqrt(2c) exp(2 c K(tau)^2 tr(Q) tau), c the squared shift bound,
/// C_P = Lip(p) ||delta||_sup ||D||.
double lipschitz_certificate(const SigmaSpec& sigma, const CovOp& q, double tau,
                             double payoff_lipschitz, const ContractSpec& contract,
                             AlphaWeight space);

} // namespace fc
