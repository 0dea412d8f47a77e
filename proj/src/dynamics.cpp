#include "fc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fc/errors.hpp"

namespace fc {

namespace {

void parallel_paths(int n_paths, bool serial, const std::function<void(int)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    unsigned n_threads = std::clamp<unsigned>(hw == 0 ? 1 : hw, 1, 8);
    if (serial || n_paths < 256 || n_threads == 1) {
        for (int p = 0; p < n_paths; ++p) body(p);
        return;
    }
    std::vector<std::thread> workers;
    int chunk = (n_paths + static_cast<int>(n_threads) - 1) / static_cast<int>(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        int lo = static_cast<int>(t) * chunk;
        int hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &body] {
            for (int p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& w : workers) w.join();
}

std::vector<Curve> sigma_modes(const SigmaSpec& sigma, const CovOp& q) {
    std::vector<Curve> out;
    out.reserve(q.rank());
    for (const Curve& e : q.modes()) out.push_back(sigma.apply(e));
    return out;
}

// Subordinator increment over dt, or dt itself for Gaussian noise.
double step_time_change(const NoiseSpec& noise, const SubstreamRng& rng, double dt,
                        uint64_t path, uint64_t step) {
    if (noise.kind == NoiseSpec::Kind::gaussian) return dt;
    double mu = noise.ig_delta * dt / noise.ig_gamma;
    double lam = noise.ig_delta * dt * noise.ig_delta * dt;
    return rng.inverse_gaussian(mu, lam, path, step, 0);
}

Eigen::MatrixXd block_factor(const BlockCov& block) {
    Eigen::MatrixXd m = assembled_matrix(block);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

} // namespace

NoiseSpec NoiseSpec::nig(CovOp q, double delta, double gamma) {
    if (!(delta > 0.0) || !(gamma > 0.0))
        throw config_error("NoiseSpec: NIG subordinator needs ig_delta, ig_gamma > 0");
    return {Kind::nig, std::move(q), delta, gamma};
}

void SimPlan::validate() const {
    if (!(t1 > t0)) throw config_error("SimPlan: t1 must exceed t0");
    if (n_steps < 1 || n_paths < 1) throw config_error("SimPlan: steps and paths must be >= 1");
}

std::vector<Curve> simulate_mild(const Curve& g0, const SigmaSpec& sigma,
                                 const NoiseSpec& noise, const SimPlan& plan,
                                 const PathRecorder& recorder) {
    plan.validate();
    const double dt = plan.dt();
    const SubstreamRng rng{plan.seed};
    const bool quiet_sigma = sigma.is_zero();
    const std::vector<Curve> b = quiet_sigma ? std::vector<Curve>{} : sigma_modes(sigma, noise.cov);
    const std::vector<double>& lam = noise.cov.lambdas();

    std::vector<Curve> out(plan.n_paths, Curve(g0.space(), 0.0));
    parallel_paths(plan.n_paths, static_cast<bool>(recorder), [&](int p) {
        Curve g = g0;
        for (int j = 0; j < plan.n_steps; ++j) {
            double tj = plan.t0 + j * dt;
            g = shift(g, dt);
            if (!quiet_sigma) {
                double du = step_time_change(noise, rng, dt, p, j);
                double sd = std::sqrt(du);
                double nu = sigma.nu(tj);
                Curve inc(g0.space(), 0.0);
                for (size_t k = 0; k < b.size(); ++k) {
                    double w = std::sqrt(lam[k]) * nu * sd * rng.normal(p, j, 2 + k);
                    inc = combine(1.0, inc, w, b[k]);
                }
                g = combine(1.0, g, 1.0, inc);
            }
            if (recorder) recorder(p, j, tj + dt, g);
        }
        out[p] = std::move(g);
    });
    return out;
}

Curve drift_mu(const SigmaSpec& sigma, const CovOp& q, double t, const RefinementHint& hint) {
    AlphaWeight space = q.modes().empty() ? AlphaWeight() : q.modes()[0].space();
    if (sigma.is_zero() || q.rank() == 0) return Curve(space, 0.0);
    std::vector<Curve> b = sigma_modes(sigma, q);
    const std::vector<double>& lam = q.lambdas();
    std::vector<double> breaks;
    double hi = 0.0;
    for (const Curve& c : b) {
        breaks.insert(breaks.end(), c.knots().begin(), c.knots().end());
        hi = std::max(hi, c.last_knot());
    }
    double nu2 = sigma.nu(t) * sigma.nu(t);
    auto value = [&](double x) {
        double s = 0.0;
        for (size_t k = 0; k < b.size(); ++k) {
            double v = b[k](x);
            s += lam[k] * v * v;
        }
        return -0.5 * nu2 * s;
    };
    auto deriv = [&](double x) {
        double s = 0.0;
        for (size_t k = 0; k < b.size(); ++k) s += lam[k] * b[k](x) * b[k].derivative_at(x);
        return -nu2 * s;
    };
    if (hi == 0.0) return Curve(b[0].space(), value(0.0));
    std::vector<double> nodes = refine_nodes(std::move(breaks), hi, hint);
    return curve_from_samples(b[0].space(), nodes, value, deriv);
}

std::vector<Curve> simulate_geometric(const Curve& g0_tilde, const SigmaSpec& sigma,
                                      const NoiseSpec& noise, const SimPlan& plan,
                                      const PathRecorder& recorder) {
    plan.validate();
    if (noise.kind != NoiseSpec::Kind::gaussian)
        throw config_error(
            "simulate_geometric: the risk-neutral drift is only available for Gaussian noise");
    const double dt = plan.dt();
    const SubstreamRng rng{plan.seed};
    const bool quiet_sigma = sigma.is_zero();
    const std::vector<Curve> b = quiet_sigma ? std::vector<Curve>{} : sigma_modes(sigma, noise.cov);
    const std::vector<double>& lam = noise.cov.lambdas();

    // nu(t)^2 scales a fixed spatial drift profile.
    SigmaSpec unit_nu = sigma;
    unit_nu.nu = TimeFactor::constant(1.0);
    const Curve drift_profile = quiet_sigma ? Curve(g0_tilde.space(), 0.0)
                                            : drift_mu(unit_nu, noise.cov, 0.0);

    std::vector<Curve> out(plan.n_paths, Curve(g0_tilde.space(), 0.0));
    parallel_paths(plan.n_paths, static_cast<bool>(recorder), [&](int p) {
        Curve g = g0_tilde;
        for (int j = 0; j < plan.n_steps; ++j) {
            double tj = plan.t0 + j * dt;
            double nu = sigma.nu(tj);
            g = shift(g, dt);
            if (!quiet_sigma) {
                g = combine(1.0, g, dt * nu * nu, drift_profile);
                Curve inc(g.space(), 0.0);
                for (size_t k = 0; k < b.size(); ++k) {
                    double w = std::sqrt(lam[k] * dt) * nu * rng.normal(p, j, 2 + k);
                    inc = combine(1.0, inc, w, b[k]);
                }
                g = combine(1.0, g, 1.0, inc);
            }
            if (recorder) recorder(p, j, tj + dt, g);
        }
        out[p] = exp_curve(g);
    });
    return out;
}

std::pair<std::vector<Curve>, std::vector<Curve>> simulate_bivariate(
    const Curve& g01, const Curve& g02, const SigmaSpec& sigma1, const SigmaSpec& sigma2,
    const BlockCov& block, const SimPlan& plan, const PathRecorder& recorder1,
    const PathRecorder& recorder2) {
    plan.validate();
    BlockReport rep = validate_block(block);
    if (!rep.valid) throw config_error("simulate_bivariate: invalid block covariance: " + rep.reason);

    const double dt = plan.dt();
    const SubstreamRng rng{plan.seed};
    const size_t n1 = block.q1.rank(), n2 = block.q2.rank();
    const std::vector<Curve> b1 = sigma_modes(sigma1, block.q1);
    const std::vector<Curve> b2 = sigma_modes(sigma2, block.q2);
    const Eigen::MatrixXd factor = block_factor(block);

    std::vector<Curve> out1(plan.n_paths, Curve(g01.space(), 0.0));
    std::vector<Curve> out2(plan.n_paths, Curve(g02.space(), 0.0));
    bool serial = recorder1 || recorder2;
    parallel_paths(plan.n_paths, serial, [&](int p) {
        Curve x1 = g01, x2 = g02;
        Eigen::VectorXd z(n1 + n2), w(n1 + n2);
        for (int j = 0; j < plan.n_steps; ++j) {
            double tj = plan.t0 + j * dt;
            x1 = shift(x1, dt);
            x2 = shift(x2, dt);
            for (size_t i = 0; i < n1 + n2; ++i) z(i) = rng.normal(p, j, 2 + i);
            w = std::sqrt(dt) * (factor * z);
            Curve inc1(x1.space(), 0.0), inc2(x2.space(), 0.0);
            double nu1 = sigma1.nu(tj), nu2 = sigma2.nu(tj);
            for (size_t k = 0; k < n1; ++k) inc1 = combine(1.0, inc1, nu1 * w(k), b1[k]);
            for (size_t m = 0; m < n2; ++m) inc2 = combine(1.0, inc2, nu2 * w(n1 + m), b2[m]);
            x1 = combine(1.0, x1, 1.0, inc1);
            x2 = combine(1.0, x2, 1.0, inc2);
            if (recorder1) recorder1(p, j, tj + dt, x1);
            if (recorder2) recorder2(p, j, tj + dt, x2);
        }
        out1[p] = std::move(x1);
        out2[p] = std::move(x2);
    });
    return {std::move(out1), std::move(out2)};
}

TerminalScheme swap_terminal_scheme(const Curve& g0, const SigmaSpec& sigma, const CovOp& q,
                                    const ContractSpec& contract, double t, double tau,
                                    int n_steps) {
    if (!(t <= tau) || !(tau <= contract.T1))
        throw domain_error("swap_terminal_scheme: need t <= tau <= T1");
    TerminalScheme s;
    s.base = swap_price(g0, contract, t);
    s.dt = (tau - t) / n_steps;
    s.coef.assign(n_steps, std::vector<double>(q.rank(), 0.0));
    if (sigma.is_zero()) return s;
    std::vector<Curve> b = sigma_modes(sigma, q);
    for (int j = 0; j < n_steps; ++j) {
        double tj = t + j * s.dt;
        double x = contract.T1 - (tj + s.dt);
        double nu = sigma.nu(tj);
        for (size_t k = 0; k < q.rank(); ++k)
            s.coef[j][k] = nu * eval_D_at(contract.weight, b[k], x);
    }
    return s;
}

TerminalScheme geometric_forward_scheme(const Curve& g0_tilde, const SigmaSpec& sigma,
                                        const CovOp& q, double T, double t, double tau,
                                        int n_steps) {
    if (!(t <= tau) || !(tau <= T))
        throw domain_error("geometric_forward_scheme: need t <= tau <= T");
    TerminalScheme s;
    s.base = g0_tilde(T - t);
    s.dt = (tau - t) / n_steps;
    s.exponentiate = true;
    s.coef.assign(n_steps, std::vector<double>(q.rank(), 0.0));
    s.drift.assign(n_steps, 0.0);
    if (sigma.is_zero()) return s;
    std::vector<Curve> b = sigma_modes(sigma, q);
    for (int j = 0; j < n_steps; ++j) {
        double tj = t + j * s.dt;
        double x = T - (tj + s.dt);
        double nu = sigma.nu(tj);
        double var_rate = 0.0;
        for (size_t k = 0; k < q.rank(); ++k) {
            double a = nu * b[k](x);
            s.coef[j][k] = a;
            var_rate += q.lambdas()[k] * a * a;
        }
        s.drift[j] = -0.5 * var_rate * s.dt;
    }
    return s;
}

McRun run_terminal_mc(const TerminalScheme& scheme, const NoiseSpec& noise, int n_paths,
                      uint64_t seed, int checkpoints) {
    const int n_steps = static_cast<int>(scheme.coef.size());
    const std::vector<double>& lam = noise.cov.lambdas();
    const SubstreamRng rng{seed};

    std::vector<int> marks;
    if (checkpoints > 0) {
        for (int c = 1; c <= checkpoints; ++c)
            marks.push_back(std::max(1, n_steps * c / checkpoints) - 1);
        marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    }

    McRun run;
    run.terminal.assign(n_paths, 0.0);
    std::vector<std::vector<double>> checks(marks.size(), std::vector<double>(n_paths, 0.0));

    parallel_paths(n_paths, false, [&](int p) {
        double x = scheme.base;
        size_t mark_i = 0;
        for (int j = 0; j < n_steps; ++j) {
            double du = step_time_change(noise, rng, scheme.dt, p, j);
            double sd = std::sqrt(du);
            if (!scheme.drift.empty()) x += scheme.drift[j];
            const std::vector<double>& cj = scheme.coef[j];
            for (size_t k = 0; k < cj.size(); ++k)
                if (cj[k] != 0.0) x += cj[k] * std::sqrt(lam[k]) * sd * rng.normal(p, j, 2 + k);
            while (mark_i < marks.size() && marks[mark_i] == j) {
                checks[mark_i][p] = scheme.exponentiate ? std::exp(x) : x;
                ++mark_i;
            }
        }
        run.terminal[p] = scheme.exponentiate ? std::exp(x) : x;
    });

    for (size_t m = 0; m < marks.size(); ++m) {
        run.check_times.push_back((marks[m] + 1) * scheme.dt);
        double mean = 0.0;
        for (double v : checks[m]) mean += v;
        mean /= n_paths;
        double var = 0.0;
        for (double v : checks[m]) var += (v - mean) * (v - mean);
        var /= std::max(1, n_paths - 1);
        run.check_mean.push_back(mean);
        run.check_se.push_back(std::sqrt(var / n_paths));
    }
    return run;
}

std::pair<std::vector<double>, std::vector<double>> run_bivariate_terminal_mc(
    const TerminalScheme& s1, const TerminalScheme& s2, const BlockCov& block, int n_paths,
    uint64_t seed, bool decomposition_route) {
    const int n_steps = static_cast<int>(s1.coef.size());
    if (s2.coef.size() != s1.coef.size() || s1.dt != s2.dt)
        throw config_error("run_bivariate_terminal_mc: schemes must share the time grid");
    const size_t n1 = block.q1.rank(), n2 = block.q2.rank();
    const SubstreamRng rng{seed};
    const double sqdt = std::sqrt(s1.dt);

    Eigen::MatrixXd factor;
    Eigen::MatrixXd reg_coeff, resid_factor;
    if (!decomposition_route) {
        factor = block_factor(block);
    } else {
        Regression reg = regression_operator(block);
        reg_coeff = reg.coeff;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reg.residual_cov);
        resid_factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    std::vector<double> out1(n_paths), out2(n_paths);
    parallel_paths(n_paths, false, [&](int p) {
        double x1 = s1.base, x2 = s2.base;
        Eigen::VectorXd z(n1 + n2), w(n1 + n2);
        for (int j = 0; j < n_steps; ++j) {
            for (size_t i = 0; i < n1 + n2; ++i) z(i) = rng.normal(p, j, 2 + i);
            if (!decomposition_route) {
                w = sqdt * (factor * z);
            } else {
                // First leg in its eigen coordinates, second as B X1 + residual.
                Eigen::VectorXd w1(n1);
                for (size_t k = 0; k < n1; ++k)
                    w1(k) = sqdt * std::sqrt(block.q1.lambdas()[k]) * z(k);
                Eigen::VectorXd w2 = reg_coeff * w1 + sqdt * (resid_factor * z.tail(n2));
                w.head(n1) = w1;
                w.tail(n2) = w2;
            }
            if (!s1.drift.empty()) x1 += s1.drift[j];
            if (!s2.drift.empty()) x2 += s2.drift[j];
            for (size_t k = 0; k < n1; ++k) x1 += s1.coef[j][k] * w(k);
            for (size_t m = 0; m < n2; ++m) x2 += s2.coef[j][m] * w(n1 + m);
        }
        out1[p] = s1.exponentiate ? std::exp(x1) : x1;
        out2[p] = s2.exponentiate ? std::exp(x2) : x2;
    });
    return {std::move(out1), std::move(out2)};
}

std::pair<std::vector<double>, std::vector<double>> sample_noise_field(
    const BlockCov& block, double t, double x, double y, int n_samples, uint64_t seed) {
    const size_t n1 = block.q1.rank(), n2 = block.q2.rank();
    const Eigen::MatrixXd factor = block_factor(block);
    const SubstreamRng rng{seed};
    std::vector<double> e1x(n1), e2y(n2);
    for (size_t k = 0; k < n1; ++k) e1x[k] = block.q1.modes()[k](x);
    for (size_t m = 0; m < n2; ++m) e2y[m] = block.q2.modes()[m](y);

    std::vector<double> f1(n_samples), f2(n_samples);
    double sq = std::sqrt(t);
    parallel_paths(n_samples, false, [&](int p) {
        Eigen::VectorXd z(n1 + n2);
        for (size_t i = 0; i < n1 + n2; ++i) z(i) = rng.normal(p, 0, 2 + i);
        Eigen::VectorXd w = sq * (factor * z);
        double a = 0.0, bsum = 0.0;
        for (size_t k = 0; k < n1; ++k) a += w(k) * e1x[k];
        for (size_t m = 0; m < n2; ++m) bsum += w(n1 + m) * e2y[m];
        f1[p] = a;
        f2[p] = bsum;
    });
    return {std::move(f1), std::move(f2)};
}

Curve schwartz_curve(AlphaWeight space, double x0, double rho, double theta, double sigma_s,
                     double x_max, const RefinementHint& hint) {
    if (!(rho > 0.0)) throw config_error("schwartz_curve: rho must be positive");
    if (sigma_s < 0.0) throw config_error("schwartz_curve: sigma_s must be nonnegative");
    auto exponent = [&](double x) {
        double e = std::exp(-rho * x);
        return e * x0 + theta * (1.0 - e) + sigma_s * sigma_s * -std::expm1(-2.0 * rho * x) / (4.0 * rho);
    };
    auto exponent_d = [&](double x) {
        double e = std::exp(-rho * x);
        return rho * (theta - x0) * e + 0.5 * sigma_s * sigma_s * e * e;
    };
    auto value = [&](double x) { return std::exp(exponent(x)); };
    auto deriv = [&](double x) { return value(x) * exponent_d(x); };
    RefinementHint h = hint;
    if (h.max_dx <= 0.0) h.max_dx = std::min(0.1, 0.125 / rho);
    std::vector<double> nodes = refine_nodes({}, x_max, h);
    return curve_from_samples(space, nodes, value, deriv);
}

} // namespace fc
