#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fc/covariance.hpp"
#include "fc/delivery.hpp"
#include "fc/rng.hpp"

namespace fc {

/// Driving noise: a curve-valued Brownian motion with covariance `cov`, or
/// the same motion time-changed by an inverse Gaussian subordinator with
/// U(1) ~ IG(ig_delta, ig_gamma). The subordinated process is zero-mean and
/// square integrable with E<L(1),u><L(1),v> = E[U(1)] <Q u, v>,
/// E[U(1)] = ig_delta / ig_gamma.
struct NoiseSpec {
    enum class Kind { gaussian, nig };
    Kind kind = Kind::gaussian;
    CovOp cov;
    double ig_delta = 0.0;
    double ig_gamma = 0.0;

    static NoiseSpec gaussian(CovOp q) { return {Kind::gaussian, std::move(q), 0.0, 0.0}; }
    static NoiseSpec nig(CovOp q, double delta, double gamma);

    double subordinator_mean() const {
        return kind == Kind::nig ? ig_delta / ig_gamma : 1.0;
    }
};

struct SimPlan {
    enum class Model { arithmetic, geometric };
    double t0 = 0.0;
    double t1 = 1.0;
    int n_steps = 1;
    int n_paths = 1;
    uint64_t seed = 0;
    Model model = Model::arithmetic;

    void validate() const;
    double dt() const { return (t1 - t0) / n_steps; }
};

/// Per-step observer; receives the state curve after each step (the log-curve
/// for geometric runs).
using PathRecorder = std::function<void(int path, int step, double time, const Curve& state)>;

/// Mild-solution simulation of the transport SPDE: exact shift plus an
/// Euler noise increment per step,
///   g_{j+1} = S_dt g_j + sum_k sqrt(lambda_k) nu(t_j) sigma(e_k) dW_{j,k},
/// dW iid N(0, dt); under NIG noise dW_{j,k} ~ N(0, dU_j) with one
/// subordinator increment dU_j ~ IG(ig_delta dt, ig_gamma) shared across
/// modes. Returns terminal curves. Path/step/mode substreams make the output
/// independent of scheduling.
std::vector<Curve> simulate_mild(const Curve& g0, const SigmaSpec& sigma,
                                 const NoiseSpec& noise, const SimPlan& plan,
                                 const PathRecorder& recorder = {});

/// Risk-neutral drift of the geometric (exponential) model, as a curve:
/// mu(t, x) = -1/2 nu(t)^2 sum_k lambda_k (sigma(e_k)(x))^2.
Curve drift_mu(const SigmaSpec& sigma, const CovOp& q, double t,
               const RefinementHint& hint = {});

/// Geometric model: simulates the log-curve with the risk-neutral drift added
/// per step and returns exp of the terminal state. Gaussian noise only (the
/// drift condition is derived for Wiener noise); NIG requests are rejected.
std::vector<Curve> simulate_geometric(const Curve& g0_tilde, const SigmaSpec& sigma,
                                      const NoiseSpec& noise, const SimPlan& plan,
                                      const PathRecorder& recorder = {});

/// Correlated bivariate simulation. Increments of the two driving motions are
/// drawn jointly from the assembled block covariance; rejects invalid blocks.
std::pair<std::vector<Curve>, std::vector<Curve>> simulate_bivariate(
    const Curve& g01, const Curve& g02, const SigmaSpec& sigma1, const SigmaSpec& sigma2,
    const BlockCov& block, const SimPlan& plan, const PathRecorder& recorder1 = {},
    const PathRecorder& recorder2 = {});

/// Terminal forward sampled through a fixed scalar functional of the noise
/// modes. This is the exact linear unrolling of the Euler scheme above: the
/// shift is exact and all operators are linear, so applying the delivery
/// functional at the end collapses each path to
///   base + sum_j sum_k coef[j][k] dW_{j,k}  (+ drift[j] per step),
/// which matches the curve-state simulation draw for draw.
struct TerminalScheme {
    double base = 0.0;
    std::vector<std::vector<double>> coef; // [step][mode]
    std::vector<double> drift;             // [step]; empty for arithmetic runs
    double dt = 0.0;
    bool exponentiate = false;             // geometric: terminal value is exp(state)
};

/// Scheme for the swap value F(tau, T1, T2) under the arithmetic model
/// starting from g0 at time t.
TerminalScheme swap_terminal_scheme(const Curve& g0, const SigmaSpec& sigma, const CovOp& q,
                                    const ContractSpec& contract, double t, double tau,
                                    int n_steps);

/// Scheme for the fixed-maturity forward f(tau, T) = exp(log-forward) under
/// the geometric model starting from the log-curve g0_tilde at time t.
TerminalScheme geometric_forward_scheme(const Curve& g0_tilde, const SigmaSpec& sigma,
                                        const CovOp& q, double T, double t, double tau,
                                        int n_steps);

struct McRun {
    std::vector<double> terminal;      // one value per path
    std::vector<double> check_times;   // running martingale diagnostics
    std::vector<double> check_mean;
    std::vector<double> check_se;
};

/// Runs a terminal scheme over n_paths with the given noise kind; paths are
/// executed in parallel and reduced in path order. `checkpoints` asks for
/// running means of the (exponentiated) state at evenly spaced steps.
McRun run_terminal_mc(const TerminalScheme& scheme, const NoiseSpec& noise, int n_paths,
                      uint64_t seed, int checkpoints = 0);

/// Bivariate terminal sampler: two schemes driven by jointly Gaussian mode
/// increments with the assembled block covariance. `decomposition_route`
/// draws the second leg as B X1 + Z (regression coefficient plus independent
/// residual) instead of the joint factor; both routes target the same law.
std::pair<std::vector<double>, std::vector<double>> run_bivariate_terminal_mc(
    const TerminalScheme& s1, const TerminalScheme& s2, const BlockCov& block, int n_paths,
    uint64_t seed, bool decomposition_route = false);

/// Samples of the curve-valued noise pair (L1(t,x), L2(t,y)) used as the
/// Monte-Carlo oracle for the cross-covariance field.
std::pair<std::vector<double>, std::vector<double>> sample_noise_field(
    const BlockCov& block, double t, double x, double y, int n_samples, uint64_t seed);

/// Forward curve implied by an exponential Ornstein-Uhlenbeck spot model:
/// f(x) = exp(e^{-rho x} x0 + theta (1 - e^{-rho x}) + int_0^x phi(e^{-rho s}) ds)
/// with phi(z) = sigma_s^2 z^2 / 2. A realistic test fixture; the curve has
/// finite norm whenever alpha_tilde < 2 rho.
Curve schwartz_curve(AlphaWeight space, double x0, double rho, double theta, double sigma_s,
                     double x_max = 6.0, const RefinementHint& hint = {});

} // namespace fc
