#include "fc/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fc/dynamics.hpp"
#include "fc/errors.hpp"
#include "fc/market_io.hpp"
#include "fc/pricing.hpp"

namespace fc {

namespace {

using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    bool emit_json = false;
    uint64_t seed = 0;
    bool seed_set = false;
};

ModelConfig require_config(const CommonOpts& c) {
    std::string path = c.config_path;
    if (path.empty()) {
        const char* env = std::getenv("FC_CONFIG");
        if (env) path = env;
    }
    if (path.empty()) throw config_error("a config file is required (--config or FC_CONFIG)");
    ModelConfig cfg = load_config(path);
    if (c.seed_set) cfg.seed = c.seed;
    return cfg;
}

DeliveryWeight::Kind style_from_string(const std::string& s) {
    if (s == "uniform") return DeliveryWeight::Kind::uniform;
    if (s == "unit") return DeliveryWeight::Kind::unit;
    if (s == "futures") return DeliveryWeight::Kind::futures_style;
    throw config_error("unknown style '" + s + "' (uniform|unit|futures)");
}

DeliveryWeight make_weight(DeliveryWeight::Kind kind, double ell, double r) {
    switch (kind) {
        case DeliveryWeight::Kind::unit: return DeliveryWeight::unit(ell);
        case DeliveryWeight::Kind::futures_style: return DeliveryWeight::futures_style(ell, r);
        default: return DeliveryWeight::uniform(ell);
    }
}

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

Payoff parse_table_payoff(const std::string& spec) {
    // "x:y,x:y,..."
    std::vector<double> xs, ys;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t colon = tok.find(':');
        if (colon == std::string::npos)
            throw config_error("payoff table entries must look like x:y");
        xs.push_back(std::stod(tok.substr(0, colon)));
        ys.push_back(std::stod(tok.substr(colon + 1)));
    }
    return Payoff::table(std::move(xs), std::move(ys));
}

void emit(std::ostream& out, bool as_json, const json& j) {
    if (as_json) {
        out << j.dump(2) << "\n";
        return;
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        out << it.key() << ": " << it.value().dump() << "\n";
}

const SigmaSpec& sigma_of(const ModelConfig& cfg) {
    if (!cfg.sigma) throw config_error("config has no sigma block");
    return *cfg.sigma;
}

const CovOp& q_of(const ModelConfig& cfg) {
    if (!cfg.q) throw config_error("config has no q (covariance) block");
    return *cfg.q;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fcurve: delivery-period forward curves and energy option pricing"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "model config JSON (or FC_CONFIG)");
    app.add_flag("--json", common.emit_json, "emit machine-readable JSON");
    app.add_option("--seed", common.seed, "seed override for MC commands")
        ->each([&](const std::string&) { common.seed_set = true; });

    // curve-fit
    auto* fit = app.add_subcommand("curve-fit", "bootstrap a curve from swap quotes");
    std::string fit_quotes, fit_out, fit_knots;
    double fit_smooth = 0.0;
    fit->add_option("--quotes", fit_quotes, "quotes CSV")->required();
    fit->add_option("--out", fit_out, "output curve JSON")->required();
    fit->add_option("--smoothness", fit_smooth, "roughness penalty weight");
    fit->add_option("--knots", fit_knots, "comma-separated knot override");

    // curve-show
    auto* show = app.add_subcommand("curve-show", "inspect a stored curve");
    std::string show_curve, show_at;
    show->add_option("--curve", show_curve, "curve JSON")->required();
    show->add_option("--at", show_at, "comma-separated maturities to evaluate");

    // price
    auto* price = app.add_subcommand("price", "price an option");
    std::string price_kind;
    price->add_option("kind", price_kind, "call|put|custom|spread|margrabe|quanto|nig")
        ->required();
    std::string p_curve, p_curve2, p_block, p_table, p_style = "uniform", p_style2 = "uniform";
    double p_t = 0.0, p_tau = 0.0, p_r = 0.0, p_K = 0.0, p_K2 = 0.0;
    double p_T1 = 0.0, p_T2 = 0.0, p_T1b = 0.0, p_T2b = 0.0, p_T = 0.0;
    double p_wr = 0.0, p_wr2 = 0.0;
    price->add_option("--curve", p_curve, "initial curve JSON");
    price->add_option("--curve2", p_curve2, "second leg curve JSON");
    price->add_option("--block", p_block, "block covariance JSON");
    price->add_option("--t", p_t, "valuation time")->required();
    price->add_option("--tau", p_tau, "exercise time")->required();
    price->add_option("--r", p_r, "risk-free rate");
    price->add_option("--K", p_K, "strike");
    price->add_option("--K2", p_K2, "second payoff strike (quanto)");
    price->add_option("--T1", p_T1, "delivery start");
    price->add_option("--T2", p_T2, "delivery end");
    price->add_option("--T1b", p_T1b, "second delivery start");
    price->add_option("--T2b", p_T2b, "second delivery end");
    price->add_option("--T", p_T, "fixed maturity (margrabe)");
    price->add_option("--style", p_style, "weight style: uniform|unit|futures");
    price->add_option("--style2", p_style2, "second leg style");
    price->add_option("--wr", p_wr, "futures-style rate, first leg");
    price->add_option("--wr2", p_wr2, "futures-style rate, second leg");
    price->add_option("--payoff-table", p_table, "custom payoff as x:y,x:y,...");

    // delta
    auto* delta = app.add_subcommand("delta", "directional price sensitivities");
    std::string d_curve, d_dirs, d_style = "uniform";
    double d_t = 0.0, d_tau = 0.0, d_r = 0.0, d_K = 0.0, d_T1 = 0.0, d_T2 = 0.0, d_wr = 0.0;
    int d_modes = 0;
    delta->add_option("--curve", d_curve)->required();
    delta->add_option("--directions", d_dirs, "comma-separated curve JSON files");
    delta->add_option("--use-q-modes", d_modes, "use the first n covariance modes");
    delta->add_option("--t", d_t)->required();
    delta->add_option("--tau", d_tau)->required();
    delta->add_option("--r", d_r);
    delta->add_option("--K", d_K)->required();
    delta->add_option("--T1", d_T1)->required();
    delta->add_option("--T2", d_T2)->required();
    delta->add_option("--style", d_style);
    delta->add_option("--wr", d_wr);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate curve paths, dump probe CSV");
    std::string s_curve, s_out, s_probes, s_model = "arithmetic";
    double s_t0 = 0.0, s_t1 = 1.0;
    int s_steps = 64, s_paths = 100;
    bool s_nig = false;
    sim->add_option("--curve", s_curve)->required();
    sim->add_option("--out", s_out, "CSV output path")->required();
    sim->add_option("--probes", s_probes, "probe maturities x1,x2,...")->required();
    sim->add_option("--t0", s_t0);
    sim->add_option("--t1", s_t1)->required();
    sim->add_option("--steps", s_steps);
    sim->add_option("--paths", s_paths);
    sim->add_option("--model", s_model, "arithmetic|geometric");
    sim->add_flag("--nig", s_nig, "NIG noise (config nig block)");

    // cov-validate
    auto* cov = app.add_subcommand("cov-validate", "validate a block covariance");
    std::string c_block;
    cov->add_option("--block", c_block)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (*fit) {
            ModelConfig cfg = require_config(common);
            QuoteSet quotes = load_quotes(fit_quotes);
            FitOptions opt;
            opt.smoothness = fit_smooth;
            if (!fit_knots.empty()) opt.knots = parse_number_list(fit_knots);
            auto [curve, report] = fit_curve(quotes, cfg.space, opt);
            save_curve(curve, fit_out);
            emit(out, common.emit_json,
                 json{{"out", fit_out},
                      {"rows", quotes.rows.size()},
                      {"max_abs_residual", report.max_abs_residual},
                      {"residuals", report.residuals},
                      {"curve_norm", report.curve_norm},
                      {"regularized", report.regularized}});
            return 0;
        }
        if (*show) {
            Curve c = load_curve(show_curve);
            json j{{"alpha_tilde", c.space().alpha_tilde},
                   {"f0", c.level()},
                   {"n_knots", c.knots().size()},
                   {"norm", norm(c)}};
            if (!show_at.empty()) {
                json vals = json::array();
                for (double x : parse_number_list(show_at))
                    vals.push_back(json{{"x", x}, {"value", c(x)}});
                j["values"] = vals;
            }
            emit(out, common.emit_json, j);
            return 0;
        }
        if (*price) {
            ModelConfig cfg = require_config(common);
            PricingRequest req;
            req.t = p_t;
            req.tau = p_tau;
            req.rate = p_r;

            if (price_kind == "call" || price_kind == "put" || price_kind == "custom" ||
                price_kind == "nig") {
                Curve g = load_curve(p_curve);
                ContractSpec contract(p_T1, p_T2,
                                      make_weight(style_from_string(p_style), p_T2 - p_T1, p_wr));
                if (price_kind == "custom") {
                    if (p_table.empty()) throw config_error("custom payoff needs --payoff-table");
                    req.payoff = parse_table_payoff(p_table);
                } else if (price_kind == "put") {
                    req.payoff = Payoff::put(p_K);
                } else {
                    req.payoff = Payoff::call(p_K);
                }
                PriceResult r;
                if (price_kind == "nig") {
                    if (!(cfg.nig_delta > 0.0))
                        throw config_error("config needs a nig block for NIG pricing");
                    r = price_call_nig(g, sigma_of(cfg), q_of(cfg), cfg.nig_delta, cfg.nig_gamma,
                                       contract, req, cfg.nig_damping, 4096, cfg.time_nodes);
                } else {
                    r = price_european_gaussian(g, sigma_of(cfg), q_of(cfg), contract, req,
                                                cfg.quad_order);
                }
                emit(out, common.emit_json,
                     json{{"price", r.price}, {"m", r.diag.m}, {"xi2", r.diag.xi2},
                          {"quad_stable", r.diag.quad_stable}});
                return 0;
            }
            if (price_kind == "spread") {
                Curve g = load_curve(p_curve);
                ContractSpec c1(p_T1, p_T2,
                                make_weight(style_from_string(p_style), p_T2 - p_T1, p_wr));
                ContractSpec c2(p_T1b, p_T2b,
                                make_weight(style_from_string(p_style2), p_T2b - p_T1b, p_wr2));
                PriceResult r = price_calendar_spread(g, sigma_of(cfg), q_of(cfg), c1, c2,
                                                      Payoff2D::spread_call(p_K), req,
                                                      cfg.time_nodes, cfg.quad_order);
                emit(out, common.emit_json,
                     json{{"price", r.price},
                          {"m1", r.diag.m},
                          {"m2", r.diag.m2},
                          {"xi2_1", r.diag.xi2},
                          {"xi2_2", r.diag.xi2_2},
                          {"cov", r.diag.cov}});
                return 0;
            }
            if (price_kind == "margrabe") {
                Curve g1 = load_curve(p_curve);
                Curve g2 = load_curve(p_curve2);
                BlockCov block = load_blockcov(p_block, cfg.space);
                const SigmaSpec& s1 = sigma_of(cfg);
                const SigmaSpec& s2 = cfg.sigma2 ? *cfg.sigma2 : s1;
                double f1 = std::exp(g1(p_T - p_t));
                double f2 = std::exp(g2(p_T - p_t));
                double v1 = black76_variance(s1, block.q1, p_T, p_t, p_tau, cfg.time_nodes);
                double v2 = black76_variance(s2, block.q2, p_T, p_t, p_tau, cfg.time_nodes);
                double v12 = sigma12_integral(s1, s2, block, p_T, p_t, p_tau, cfg.time_nodes);
                double total = v1 - 2.0 * v12 + v2;
                double price_value = price_margrabe(f1, f2, total, req.discount());
                emit(out, common.emit_json,
                     json{{"price", price_value}, {"f1", f1}, {"f2", f2},
                          {"spread_var", total}});
                return 0;
            }
            if (price_kind == "quanto") {
                Curve g1 = load_curve(p_curve);
                Curve g2 = load_curve(p_curve2);
                BlockCov block = load_blockcov(p_block, cfg.space);
                const SigmaSpec& s1 = sigma_of(cfg);
                const SigmaSpec& s2 = cfg.sigma2 ? *cfg.sigma2 : s1;
                double t1b = p_T1b > 0.0 ? p_T1b : p_T1;
                double t2b = p_T2b > 0.0 ? p_T2b : p_T2;
                ContractSpec c1(p_T1, p_T2,
                                make_weight(style_from_string(p_style), p_T2 - p_T1, p_wr));
                ContractSpec c2(t1b, t2b,
                                make_weight(style_from_string(p_style2), t2b - t1b, p_wr2));
                PriceResult r = price_quanto(g1, g2, s1, s2, block, c1, c2, Payoff::call(p_K),
                                             Payoff::call(p_K2), req, cfg.time_nodes,
                                             cfg.quad_order);
                emit(out, common.emit_json,
                     json{{"price", r.price},
                          {"m1", r.diag.m},
                          {"m2", r.diag.m2},
                          {"xi2_1", r.diag.xi2},
                          {"xi2_2", r.diag.xi2_2},
                          {"cov", r.diag.cov}});
                return 0;
            }
            throw config_error("unknown price kind '" + price_kind + "'");
        }
        if (*delta) {
            ModelConfig cfg = require_config(common);
            Curve g = load_curve(d_curve);
            ContractSpec contract(d_T1, d_T2,
                                  make_weight(style_from_string(d_style), d_T2 - d_T1, d_wr));
            PricingRequest req;
            req.t = d_t;
            req.tau = d_tau;
            req.rate = d_r;
            req.payoff = Payoff::call(d_K);

            std::vector<std::pair<std::string, Curve>> dirs;
            if (!d_dirs.empty()) {
                std::stringstream ss(d_dirs);
                std::string path;
                while (std::getline(ss, path, ','))
                    if (!path.empty()) dirs.emplace_back(path, load_curve(path));
            }
            if (d_modes > 0) {
                const CovOp& q = q_of(cfg);
                if (static_cast<size_t>(d_modes) > q.rank())
                    throw config_error("--use-q-modes exceeds covariance rank");
                for (int k = 0; k < d_modes; ++k)
                    dirs.emplace_back("q-mode-" + std::to_string(k + 1), q.modes()[k]);
            }
            if (dirs.empty())
                throw config_error("delta: give --directions files or --use-q-modes n");

            json rows = json::array();
            for (const auto& [label, h] : dirs) {
                DeltaResult dr =
                    delta_gateaux(g, h, sigma_of(cfg), q_of(cfg), contract, req, cfg.quad_order);
                rows.push_back(json{{"label", label},
                                    {"m_h", m_of_g(h, contract, req.t)},
                                    {"delta", dr.value},
                                    {"degenerate", dr.degenerate}});
            }
            emit(out, common.emit_json, json{{"rows", rows}});
            return 0;
        }
        if (*sim) {
            ModelConfig cfg = require_config(common);
            Curve g = load_curve(s_curve);
            std::vector<double> probes = parse_number_list(s_probes);
            if (probes.empty()) throw config_error("simulate: no probes given");
            SimPlan plan;
            plan.t0 = s_t0;
            plan.t1 = s_t1;
            plan.n_steps = s_steps;
            plan.n_paths = s_paths;
            plan.seed = cfg.seed;
            bool geometric = s_model == "geometric";
            if (!geometric && s_model != "arithmetic")
                throw config_error("simulate: model must be arithmetic or geometric");
            plan.model = geometric ? SimPlan::Model::geometric : SimPlan::Model::arithmetic;

            NoiseSpec noise = s_nig ? NoiseSpec::nig(q_of(cfg), cfg.nig_delta, cfg.nig_gamma)
                                    : NoiseSpec::gaussian(q_of(cfg));
            std::ofstream csv(s_out);
            if (!csv) throw config_error("cannot open for writing: " + s_out);
            csv << "path_id,step,time,probe_x,value\n";
            csv.precision(17);
            PathRecorder rec = [&](int path, int step, double time, const Curve& state) {
                for (double x : probes) {
                    double v = state(x);
                    csv << path << "," << step << "," << time << "," << x << ","
                        << (geometric ? std::exp(v) : v) << "\n";
                }
            };
            if (geometric)
                simulate_geometric(g, sigma_of(cfg), noise, plan, rec);
            else
                simulate_mild(g, sigma_of(cfg), noise, plan, rec);
            emit(out, common.emit_json,
                 json{{"out", s_out}, {"paths", s_paths}, {"steps", s_steps},
                      {"seed", plan.seed}});
            return 0;
        }
        if (*cov) {
            ModelConfig cfg = require_config(common);
            BlockCov block = load_blockcov(c_block, cfg.space);
            BlockReport rep = validate_block(block);
            emit(out, common.emit_json,
                 json{{"valid", rep.valid},
                      {"spectral_norm", rep.spectral_norm},
                      {"min_eig", rep.min_eigenvalue},
                      {"reason", rep.reason}});
            return 0;
        }
        err << "error: no command\n";
        return 1;
    } catch (const numeric_error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace fc
