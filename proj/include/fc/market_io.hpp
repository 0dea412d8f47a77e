#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fc/covariance.hpp"
#include "fc/delivery.hpp"

#include <json.hpp>

namespace fc {

/// One delivery-period swap quote.
struct Quote {
    double T1 = 0.0;
    double T2 = 0.0;
    DeliveryWeight::Kind style = DeliveryWeight::Kind::uniform;
    double r = 0.0; // futures-style discounting rate
    double price = 0.0;

    DeliveryWeight weight() const;
    ContractSpec contract() const { return ContractSpec(T1, T2, weight()); }
};

/// Quotes observed at one valuation time; delivery periods may overlap
/// (cascading month/quarter/year strips).
struct QuoteSet {
    double t = 0.0;
    std::vector<Quote> rows;
};

/// CSV with header t,T1,T2,style,r,price (the r column may be omitted).
/// Malformed rows and rows with T2 <= T1 are rejected naming the line.
QuoteSet parse_quotes(std::istream& in);
QuoteSet load_quotes(const std::string& path);

struct FitOptions {
    std::vector<double> knots;  // empty: quote boundaries plus uniform fill
    double smoothness = 0.0;    // penalty weight on int alpha (g')^2
    int fill_cells = 24;        // uniform fill resolution for default knots
};

struct FitReport {
    std::vector<double> residuals;  // fitted swap price minus quote, per row
    double max_abs_residual = 0.0;
    double curve_norm = 0.0;
    bool regularized = false;       // singular normal equations; minimum-roughness fallback
};

/// Least-squares bootstrap of a curve from discrete swap quotes:
/// minimizes sum_rows (swap_price(g, row) - price)^2 + smoothness int alpha (g')^2
/// over the piecewise representation (linear in the level and slopes). With
/// smoothness -> 0 an underdetermined system resolves to the
/// minimum-roughness interpolant.
std::pair<Curve, FitReport> fit_curve(const QuoteSet& quotes, AlphaWeight space,
                                      const FitOptions& options = {});

// JSON surfaces; round trips are value-faithful for finite doubles.
nlohmann::json curve_to_json(const Curve& c);
Curve curve_from_json(const nlohmann::json& j);
void save_curve(const Curve& c, const std::string& path);
Curve load_curve(const std::string& path);

nlohmann::json covop_to_json(const CovOp& q);
CovOp covop_from_json(const nlohmann::json& j, AlphaWeight space);
nlohmann::json blockcov_to_json(const BlockCov& b);
BlockCov blockcov_from_json(const nlohmann::json& j, AlphaWeight space);
BlockCov load_blockcov(const std::string& path, AlphaWeight space);

nlohmann::json weight_to_json(const DeliveryWeight& w);
DeliveryWeight weight_from_json(const nlohmann::json& j);

/// Model wiring for the CLI: space constant, numerics, volatility and noise.
struct ModelConfig {
    AlphaWeight space;
    int time_nodes = 32;
    int quad_order = 64;
    int panels_per_cell = 8;
    double tol_h = 1e-8;
    double tol_op = 1e-8;
    double pinv_cutoff = 1e-12;
    uint64_t seed = 0;
    std::optional<SigmaSpec> sigma;
    std::optional<SigmaSpec> sigma2; // second commodity leg; defaults to sigma
    std::optional<CovOp> q;
    double nig_delta = 0.0;
    double nig_gamma = 0.0;
    double nig_damping = 0.0;
};

ModelConfig config_from_json(const nlohmann::json& j);
ModelConfig load_config(const std::string& path);

} // namespace fc
