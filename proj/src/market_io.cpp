#include "fc/market_io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fc/errors.hpp"

namespace fc {

using nlohmann::json;

DeliveryWeight Quote::weight() const {
    double ell = T2 - T1;
    switch (style) {
        case DeliveryWeight::Kind::unit: return DeliveryWeight::unit(ell);
        case DeliveryWeight::Kind::uniform: return DeliveryWeight::uniform(ell);
        case DeliveryWeight::Kind::futures_style: return DeliveryWeight::futures_style(ell, r);
        case DeliveryWeight::Kind::tabulated:
            throw config_error("Quote: tabulated weights are not expressible in quote rows");
    }
    return DeliveryWeight::uniform(ell);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        // trim
        size_t a = field.find_first_not_of(" \t\r");
        size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return out;
}

double parse_num(const std::string& s, int line_no, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("quotes line " + std::to_string(line_no) + ": bad " + what + " '" +
                           s + "'");
    }
}

DeliveryWeight::Kind parse_style(const std::string& s, int line_no) {
    if (s == "uniform" || s == "forward") return DeliveryWeight::Kind::uniform;
    if (s == "unit" || s == "temperature") return DeliveryWeight::Kind::unit;
    if (s == "futures" || s == "futures_style") return DeliveryWeight::Kind::futures_style;
    throw config_error("quotes line " + std::to_string(line_no) + ": unknown style '" + s + "'");
}

} // namespace

QuoteSet parse_quotes(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw config_error("quotes: empty input, header expected");
    std::vector<std::string> hdr = split_csv(line);
    bool with_r;
    if (hdr == std::vector<std::string>{"t", "T1", "T2", "style", "r", "price"})
        with_r = true;
    else if (hdr == std::vector<std::string>{"t", "T1", "T2", "style", "price"})
        with_r = false;
    else
        throw config_error("quotes: header must be t,T1,T2,style[,r],price");

    QuoteSet qs;
    bool have_t = false;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> f = split_csv(line);
        if (f.size() != hdr.size())
            throw config_error("quotes line " + std::to_string(line_no) + ": expected " +
                               std::to_string(hdr.size()) + " fields, got " +
                               std::to_string(f.size()));
        Quote q;
        double t = parse_num(f[0], line_no, "t");
        q.T1 = parse_num(f[1], line_no, "T1");
        q.T2 = parse_num(f[2], line_no, "T2");
        q.style = parse_style(f[3], line_no);
        q.r = with_r && !f[4].empty() ? parse_num(f[4], line_no, "r") : 0.0;
        q.price = parse_num(f[with_r ? 5 : 4], line_no, "price");
        if (!(q.T2 > q.T1))
            throw config_error("quotes line " + std::to_string(line_no) +
                               ": delivery end must exceed start (T2 > T1)");
        if (q.style == DeliveryWeight::Kind::futures_style && !(q.r > 0.0))
            throw config_error("quotes line " + std::to_string(line_no) +
                               ": futures style requires r > 0");
        if (have_t && t != qs.t)
            throw config_error("quotes line " + std::to_string(line_no) +
                               ": mixed valuation times in one set");
        qs.t = t;
        have_t = true;
        if (!(t <= q.T1))
            throw config_error("quotes line " + std::to_string(line_no) +
                               ": valuation time past delivery start");
        qs.rows.push_back(q);
    }
    return qs;
}

QuoteSet load_quotes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open quotes file: " + path);
    return parse_quotes(in);
}

std::pair<Curve, FitReport> fit_curve(const QuoteSet& quotes, AlphaWeight space,
                                      const FitOptions& options) {
    if (quotes.rows.empty()) throw config_error("fit_curve: no quotes");

    std::vector<double> knots = options.knots;
    if (knots.empty()) {
        double span = 0.0;
        for (const Quote& q : quotes.rows) {
            if (q.T1 - quotes.t > 0.0) knots.push_back(q.T1 - quotes.t);
            knots.push_back(q.T2 - quotes.t);
            span = std::max(span, q.T2 - quotes.t);
        }
        int cells = std::max(2, options.fill_cells);
        for (int i = 1; i <= cells; ++i) knots.push_back(span * i / cells);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double a, double b) { return b - a < 1e-10; }),
                knots.end());
    while (!knots.empty() && knots.front() <= 0.0) knots.erase(knots.begin());
    if (knots.empty()) throw config_error("fit_curve: degenerate knot set");

    const size_t n_cells = knots.size();
    const size_t n_rows = quotes.rows.size();

    // Basis: level plus unit-slope cell curves.
    std::vector<Curve> cells;
    cells.reserve(n_cells);
    for (size_t i = 0; i < n_cells; ++i) {
        std::vector<double> ks, ds;
        if (i == 0) {
            ks = {knots[0]};
            ds = {1.0};
        } else {
            ks = {knots[i - 1], knots[i]};
            ds = {0.0, 1.0};
        }
        cells.emplace_back(space, 0.0, std::move(ks), std::move(ds));
    }

    Eigen::MatrixXd a(n_rows, n_cells + 1);
    Eigen::VectorXd p(n_rows);
    for (size_t rix = 0; rix < n_rows; ++rix) {
        const Quote& q = quotes.rows[rix];
        ContractSpec contract = q.contract();
        a(rix, 0) = contract.weight.total();
        for (size_t i = 0; i < n_cells; ++i)
            a(rix, i + 1) = swap_price(cells[i], contract, quotes.t);
        p(rix) = q.price;
    }

    // Roughness metric on the slope block.
    Eigen::VectorXd rough = Eigen::VectorXd::Zero(n_cells + 1);
    for (size_t i = 0; i < n_cells; ++i)
        rough(i + 1) = space.cell_mass(i == 0 ? 0.0 : knots[i - 1], knots[i]);

    Eigen::MatrixXd normal = a.transpose() * a;
    Eigen::VectorXd rhs = a.transpose() * p;
    for (size_t i = 0; i <= n_cells; ++i) normal(i, i) += options.smoothness * rough(i);

    FitReport report;
    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    Eigen::VectorXd beta;
    if (llt.info() == Eigen::Success && options.smoothness > 0.0) {
        beta = llt.solve(rhs);
    } else {
        // Singular or penalty-free system: tiny roughness ridge selects the
        // minimum-roughness solution among least-squares minimizers.
        report.regularized = options.smoothness == 0.0 || llt.info() != Eigen::Success;
        double scale = std::max(normal.diagonal().maxCoeff(), 1e-300);
        Eigen::MatrixXd reg = normal;
        for (size_t i = 0; i <= n_cells; ++i)
            reg(i, i) += 1e-12 * scale * (i == 0 ? 1e-4 : rough(i) / rough.maxCoeff());
        beta = Eigen::LDLT<Eigen::MatrixXd>(reg).solve(rhs);
    }

    std::vector<double> slopes(beta.data() + 1, beta.data() + 1 + n_cells);
    Curve fitted(space, beta(0), knots, std::move(slopes));

    report.residuals.resize(n_rows);
    for (size_t rix = 0; rix < n_rows; ++rix) {
        const Quote& q = quotes.rows[rix];
        report.residuals[rix] = swap_price(fitted, q.contract(), quotes.t) - q.price;
        report.max_abs_residual = std::max(report.max_abs_residual,
                                           std::abs(report.residuals[rix]));
    }
    report.curve_norm = norm(fitted);
    return {std::move(fitted), std::move(report)};
}

json curve_to_json(const Curve& c) {
    return json{{"schema", "curve/1"},
                {"alpha_tilde", c.space().alpha_tilde},
                {"f0", c.level()},
                {"knots", c.knots()},
                {"slopes", c.slopes()}};
}

Curve curve_from_json(const json& j) {
    if (!j.is_object() || !j.contains("alpha_tilde") || !j.contains("f0") ||
        !j.contains("knots") || !j.contains("slopes"))
        throw config_error("curve JSON: expected {alpha_tilde, f0, knots, slopes} (schema curve/1)");
    if (j.contains("schema") && j["schema"] != "curve/1")
        throw config_error("curve JSON: unsupported schema " + j["schema"].dump());
    AlphaWeight w(j["alpha_tilde"].get<double>());
    return Curve(w, j["f0"].get<double>(), j["knots"].get<std::vector<double>>(),
                 j["slopes"].get<std::vector<double>>());
}

void save_curve(const Curve& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << curve_to_json(c).dump(2) << "\n";
}

Curve load_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open curve file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("curve file " + path + ": " + e.what());
    }
    return curve_from_json(j);
}

json covop_to_json(const CovOp& q) {
    json curves = json::array();
    for (const Curve& c : q.modes()) curves.push_back(curve_to_json(c));
    return json{{"lambdas", q.lambdas()}, {"curves", curves}};
}

CovOp covop_from_json(const json& j, AlphaWeight space) {
    if (!j.is_object() || !j.contains("lambdas") || !j.contains("curves"))
        throw config_error("covariance JSON: expected {lambdas, curves}");
    std::vector<Curve> modes;
    for (const json& cj : j["curves"]) {
        Curve c = curve_from_json(cj);
        if (c.space() != space)
            throw config_error("covariance JSON: mode alpha_tilde differs from the model space");
        modes.push_back(std::move(c));
    }
    return CovOp(j["lambdas"].get<std::vector<double>>(), std::move(modes));
}

json blockcov_to_json(const BlockCov& b) {
    json c = json::array();
    for (Eigen::Index k = 0; k < b.c.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index m = 0; m < b.c.cols(); ++m) row.push_back(b.c(k, m));
        c.push_back(row);
    }
    return json{{"schema", "blockcov/1"},
                {"q1", covop_to_json(b.q1)},
                {"q2", covop_to_json(b.q2)},
                {"c_matrix", c}};
}

BlockCov blockcov_from_json(const json& j, AlphaWeight space) {
    if (!j.is_object() || !j.contains("q1") || !j.contains("q2") || !j.contains("c_matrix"))
        throw config_error("block JSON: expected {q1, q2, c_matrix} (schema blockcov/1)");
    CovOp q1 = covop_from_json(j["q1"], space);
    CovOp q2 = covop_from_json(j["q2"], space);
    const json& cm = j["c_matrix"];
    Eigen::MatrixXd c(q1.rank(), q2.rank());
    if (cm.size() != q1.rank()) throw config_error("block JSON: c_matrix row count mismatch");
    for (size_t k = 0; k < q1.rank(); ++k) {
        if (cm[k].size() != q2.rank())
            throw config_error("block JSON: c_matrix column count mismatch");
        for (size_t m = 0; m < q2.rank(); ++m) c(k, m) = cm[k][m].get<double>();
    }
    return BlockCov(std::move(q1), std::move(q2), std::move(c));
}

BlockCov load_blockcov(const std::string& path, AlphaWeight space) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open block file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("block file " + path + ": " + e.what());
    }
    return blockcov_from_json(j, space);
}

json weight_to_json(const DeliveryWeight& w) {
    json j{{"ell", w.ell()}};
    switch (w.kind()) {
        case DeliveryWeight::Kind::unit: j["kind"] = "unit"; break;
        case DeliveryWeight::Kind::uniform: j["kind"] = "uniform"; break;
        case DeliveryWeight::Kind::futures_style:
            j["kind"] = "futures";
            j["r"] = w.rate();
            break;
        case DeliveryWeight::Kind::tabulated:
            j["kind"] = "tabulated";
            j["table"] = json{{"u", w.panel_points()}, {"w", [&] {
                                  std::vector<double> vals;
                                  for (double u : w.panel_points())
                                      vals.push_back(w.density(u));
                                  return vals;
                              }()}};
            break;
    }
    return j;
}

DeliveryWeight weight_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("ell"))
        throw config_error("weight JSON: expected {kind, ell, r?, table?}");
    std::string kind = j["kind"].get<std::string>();
    double ell = j["ell"].get<double>();
    if (kind == "unit") return DeliveryWeight::unit(ell);
    if (kind == "uniform") return DeliveryWeight::uniform(ell);
    if (kind == "futures") return DeliveryWeight::futures_style(ell, j.at("r").get<double>());
    if (kind == "tabulated")
        return DeliveryWeight::tabulated(ell, j.at("table").at("u").get<std::vector<double>>(),
                                         j.at("table").at("w").get<std::vector<double>>());
    throw config_error("weight JSON: unknown kind '" + kind + "'");
}

namespace {

TimeFactor timefactor_from_json(const json& j) {
    std::string kind = j.value("kind", "constant");
    double level = j.value("level", 1.0);
    if (kind == "constant") return TimeFactor::constant(level);
    if (kind == "exp_decay") return TimeFactor::exponential(level, j.value("decay", 0.0));
    throw config_error("sigma JSON: unknown nu kind '" + kind + "'");
}

SigmaSpec sigma_from_json(const json& j, AlphaWeight space) {
    SigmaSpec s;
    if (j.contains("nu")) s.nu = timefactor_from_json(j["nu"]);
    s.identity_scale = j.value("identity_scale", 1.0);
    if (j.contains("rank_terms"))
        for (const json& t : j["rank_terms"]) {
            Curve psi = curve_from_json(t.at("psi"));
            Curve u = curve_from_json(t.at("u"));
            if (psi.space() != space || u.space() != space)
                throw config_error("sigma JSON: rank term alpha_tilde differs from model space");
            s.rank_terms.emplace_back(std::move(psi), std::move(u));
        }
    return s;
}

} // namespace

ModelConfig config_from_json(const json& j) {
    if (!j.is_object() || !j.contains("alpha_tilde"))
        throw config_error("config JSON: alpha_tilde required");
    ModelConfig cfg;
    cfg.space = AlphaWeight(j["alpha_tilde"].get<double>());
    cfg.time_nodes = j.value("time_nodes", 32);
    cfg.quad_order = j.value("quad_order", 64);
    cfg.panels_per_cell = j.value("panels_per_cell", 8);
    cfg.tol_h = j.value("tol_h", 1e-8);
    cfg.tol_op = j.value("tol_op", 1e-8);
    cfg.pinv_cutoff = j.value("pinv_cutoff", 1e-12);
    cfg.seed = j.value("seed", uint64_t{0});
    if (j.contains("sigma")) cfg.sigma = sigma_from_json(j["sigma"], cfg.space);
    if (j.contains("sigma2")) cfg.sigma2 = sigma_from_json(j["sigma2"], cfg.space);
    if (j.contains("q")) cfg.q = covop_from_json(j["q"], cfg.space);
    if (j.contains("nig")) {
        cfg.nig_delta = j["nig"].value("delta", 0.0);
        cfg.nig_gamma = j["nig"].value("gamma", 0.0);
        cfg.nig_damping = j["nig"].value("damping", 0.0);
    }
    return cfg;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace fc
