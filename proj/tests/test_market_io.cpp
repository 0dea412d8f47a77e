#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "fc/dynamics.hpp"
#include "fc/errors.hpp"
#include "fc/market_io.hpp"
#include "test_support.hpp"

using namespace fc;

namespace {
const AlphaWeight kSpace(1.0);

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }
} // namespace

TEST_CASE("quote parsing: empty set, one row, rejects") {
    {
        std::istringstream in("t,T1,T2,style,r,price\n");
        QuoteSet qs = parse_quotes(in);
        CHECK(qs.rows.empty());
    }
    {
        std::istringstream in("t,T1,T2,style,price\n0.0,0.5,0.75,uniform,31.4\n");
        QuoteSet qs = parse_quotes(in);
        REQUIRE(qs.rows.size() == 1);
        CHECK(qs.rows[0].price == 31.4);
        CHECK(qs.rows[0].style == DeliveryWeight::Kind::uniform);
    }
    {
        std::istringstream in("t,T1,T2,style,r,price\n0,0.5,0.4,uniform,,30\n");
        CHECK_THROWS_WITH_AS(parse_quotes(in),
                             doctest::Contains("line 2"), config_error);
    }
    {
        std::istringstream in("t,T1,T2,style,r,price\n0,0.5,0.75,uniform,,abc\n");
        CHECK_THROWS_WITH_AS(parse_quotes(in), doctest::Contains("price"), config_error);
    }
    {
        std::istringstream in(
            "t,T1,T2,style,r,price\n0,0.5,0.75,uniform,,30\n0.1,0.9,1.0,uniform,,31\n");
        CHECK_THROWS_WITH_AS(parse_quotes(in), doctest::Contains("mixed"), config_error);
    }
    {
        std::istringstream in("a,b\n");
        CHECK_THROWS_AS(parse_quotes(in), config_error);
    }
}

TEST_CASE("fit: single flat quote yields the constant curve") {
    QuoteSet qs;
    qs.t = 0.0;
    qs.rows.push_back({0.5, 0.75, DeliveryWeight::Kind::uniform, 0.0, 42.0});
    auto [curve, report] = fit_curve(qs, kSpace);
    CHECK(report.max_abs_residual <= 1e-8);
    for (double x : {0.0, 0.3, 0.6, 1.0})
        CHECK(curve(x) == doctest::Approx(42.0).epsilon(1e-8));
}

TEST_CASE("fit: two non-overlapping quotes reprice exactly") {
    QuoteSet qs;
    qs.t = 0.0;
    qs.rows.push_back({0.25, 0.5, DeliveryWeight::Kind::uniform, 0.0, 40.0});
    qs.rows.push_back({0.75, 1.0, DeliveryWeight::Kind::uniform, 0.0, 46.0});
    auto [curve, report] = fit_curve(qs, kSpace);
    CHECK(report.max_abs_residual <= 1e-8);
    CHECK(swap_price(curve, qs.rows[0].contract(), 0.0) == doctest::Approx(40.0).epsilon(1e-9));
    CHECK(swap_price(curve, qs.rows[1].contract(), 0.0) == doctest::Approx(46.0).epsilon(1e-9));
}

TEST_CASE("fit: synthetic round trip improves with quote count and stays deterministic") {
    Curve truth = schwartz_curve(kSpace, std::log(35.0), 1.1, std::log(30.0), 0.35, 3.0);
    auto make_quotes = [&](int n) {
        QuoteSet qs;
        qs.t = 0.0;
        for (int i = 0; i < n; ++i) {
            double t1 = 0.1 + 2.4 * i / n;
            double t2 = t1 + 2.4 / n;
            ContractSpec c(t1, t2, DeliveryWeight::uniform(t2 - t1));
            qs.rows.push_back({t1, t2, DeliveryWeight::Kind::uniform, 0.0,
                               swap_price(truth, c, 0.0)});
        }
        return qs;
    };

    double prev_dist = std::numeric_limits<double>::infinity();
    for (int n : {4, 8, 16, 32}) {
        QuoteSet qs = make_quotes(n);
        auto [fitted, report] = fit_curve(qs, kSpace);
        CHECK(report.max_abs_residual <= 1e-8);
        for (const Quote& q : qs.rows)
            CHECK(std::abs(swap_price(fitted, q.contract(), 0.0) - q.price) <= 1e-8);
        double dist = norm(combine(1.0, fitted, -1.0, truth));
        CHECK(dist <= prev_dist * 1.05);
        prev_dist = dist;
    }

    QuoteSet qs = make_quotes(8);
    auto [a, ra] = fit_curve(qs, kSpace);
    auto [b, rb] = fit_curve(qs, kSpace);
    REQUIRE(a.knots() == b.knots());
    CHECK(a.level() == b.level());
    CHECK(a.slopes() == b.slopes());
}

TEST_CASE("fit with a smoothness penalty trades residual for roughness") {
    Curve truth = schwartz_curve(kSpace, std::log(35.0), 1.1, std::log(30.0), 0.35, 3.0);
    QuoteSet qs;
    qs.t = 0.0;
    for (int i = 0; i < 6; ++i) {
        double t1 = 0.2 + 0.4 * i, t2 = t1 + 0.4;
        ContractSpec c(t1, t2, DeliveryWeight::uniform(0.4));
        qs.rows.push_back({t1, t2, DeliveryWeight::Kind::uniform, 0.0, swap_price(truth, c, 0.0)});
    }
    FitOptions smooth;
    smooth.smoothness = 1e-2;
    auto [gs, rs] = fit_curve(qs, kSpace, smooth);
    auto [g0, r0] = fit_curve(qs, kSpace);
    CHECK(rs.max_abs_residual >= r0.max_abs_residual);
    double rough_s = 0.0, rough_0 = 0.0;
    for (size_t i = 0; i < gs.slopes().size(); ++i) rough_s += gs.slopes()[i] * gs.slopes()[i];
    for (size_t i = 0; i < g0.slopes().size(); ++i) rough_0 += g0.slopes()[i] * g0.slopes()[i];
    CHECK(rough_s <= rough_0 * (1.0 + 1e-9));
}

TEST_CASE("curve JSON round trip is bit-faithful") {
    std::mt19937 rng(411);
    Curve c = tsup::random_curve(kSpace, rng, tsup::working_grid());
    nlohmann::json j = curve_to_json(c);
    Curve back = curve_from_json(j);
    REQUIRE(back.knots().size() == c.knots().size());
    CHECK(bit_equal(back.level(), c.level()));
    for (size_t i = 0; i < c.knots().size(); ++i) {
        CHECK(bit_equal(back.knots()[i], c.knots()[i]));
        CHECK(bit_equal(back.slopes()[i], c.slopes()[i]));
    }
    CHECK(bit_equal(norm(back), norm(c)));

    // string round trip as well (the CLI path)
    Curve back2 = curve_from_json(nlohmann::json::parse(j.dump()));
    CHECK(bit_equal(norm(back2), norm(c)));

    nlohmann::json missing = j;
    missing.erase("alpha_tilde");
    CHECK_THROWS_WITH_AS(curve_from_json(missing), doctest::Contains("schema"), config_error);
    nlohmann::json wrong = j;
    wrong["schema"] = "curve/9";
    CHECK_THROWS_AS(curve_from_json(wrong), config_error);
}

TEST_CASE("file round trip") {
    std::mt19937 rng(419);
    Curve c = tsup::random_curve(kSpace, rng, tsup::working_grid());
    std::string path = "roundtrip_curve_tmp.json";
    save_curve(c, path);
    Curve back = load_curve(path);
    CHECK(bit_equal(norm(back), norm(c)));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_curve("does_not_exist.json"), config_error);
}

TEST_CASE("covariance and block JSON round trips") {
    std::mt19937 rng(421);
    std::vector<double> grid = tsup::working_grid(2.0, 8);
    BlockCov b = tsup::random_block(kSpace, rng, grid, 3, 2, 0.8);
    nlohmann::json j = blockcov_to_json(b);
    BlockCov back = blockcov_from_json(j, kSpace);
    CHECK(back.q1.rank() == 3);
    CHECK(back.q2.rank() == 2);
    for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 2; ++m) CHECK(bit_equal(back.c(k, m), b.c(k, m)));
    CHECK(validate_block(back).valid == validate_block(b).valid);

    nlohmann::json bad = j;
    bad.erase("q2");
    CHECK_THROWS_AS(blockcov_from_json(bad, kSpace), config_error);
}

TEST_CASE("weight JSON round trips") {
    for (const DeliveryWeight& w :
         {DeliveryWeight::uniform(0.25), DeliveryWeight::unit(0.5),
          DeliveryWeight::futures_style(0.25, 0.3),
          DeliveryWeight::tabulated(1.0, {0.0, 0.4, 1.0}, {1.0, 1.5, 0.7})}) {
        DeliveryWeight back = weight_from_json(weight_to_json(w));
        CHECK(back.kind() == w.kind());
        CHECK(back.ell() == w.ell());
        for (double u : {0.1, 0.35, 0.8})
            if (u < w.ell())
                CHECK(back.cumulative(u) == doctest::Approx(w.cumulative(u)).epsilon(1e-12));
    }
}

TEST_CASE("model config parsing") {
    std::mt19937 rng(431);
    std::vector<double> grid = tsup::working_grid(2.0, 6);
    CovOp q = tsup::random_covop(kSpace, rng, grid, 2);
    nlohmann::json j{{"alpha_tilde", 1.0},
                     {"seed", 99},
                     {"time_nodes", 48},
                     {"sigma",
                      {{"nu", {{"kind", "exp_decay"}, {"level", 1.1}, {"decay", 0.2}}},
                       {"identity_scale", 0.9}}},
                     {"q", covop_to_json(q)},
                     {"nig", {{"delta", 2.0}, {"gamma", 3.0}}}};
    ModelConfig cfg = config_from_json(j);
    CHECK(cfg.space.alpha_tilde == 1.0);
    CHECK(cfg.seed == 99);
    CHECK(cfg.time_nodes == 48);
    REQUIRE(cfg.sigma.has_value());
    CHECK(cfg.sigma->nu(0.0) == doctest::Approx(1.1));
    REQUIRE(cfg.q.has_value());
    CHECK(cfg.q->rank() == 2);
    CHECK(cfg.nig_delta == 2.0);

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seed", 3}}), config_error);
}
