#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fc/cli.hpp"
#include "fc/dynamics.hpp"
#include "fc/market_io.hpp"
#include "fc/pricing.hpp"
#include "test_support.hpp"

using namespace fc;
namespace fs = std::filesystem;

namespace {

const AlphaWeight kSpace(1.0);

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

CliResult run(std::vector<std::string> args) {
    std::vector<const char*> argv{"fcurve"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct Fixture {
    fs::path dir;
    std::string config, curve, curve2, block, quotes;
    ModelConfig cfg;

    Fixture() {
        dir = fs::path("cli_fixture_tmp");
        fs::create_directories(dir);
        std::mt19937 rng(501);
        std::vector<double> grid = tsup::working_grid(2.0, 10);
        CovOp q = tsup::random_covop(kSpace, rng, grid, 3, 2.0, 0.5);
        nlohmann::json cj{
            {"alpha_tilde", 1.0},
            {"seed", 7},
            {"sigma", {{"nu", {{"kind", "constant"}, {"level", 1.0}}}, {"identity_scale", 1.0}}},
            {"q", covop_to_json(q)},
            {"nig", {{"delta", 2.0}, {"gamma", 2.5}}}};
        config = (dir / "config.json").string();
        std::ofstream(config) << cj.dump(2);
        cfg = load_config(config);

        Curve g1 = tsup::random_curve(kSpace, rng, grid, 30.0, 2.0);
        Curve g2 = tsup::random_curve(kSpace, rng, grid, 22.0, 2.0);
        curve = (dir / "curve.json").string();
        curve2 = (dir / "curve2.json").string();
        save_curve(g1, curve);
        save_curve(g2, curve2);

        BlockCov b = tsup::random_block(kSpace, rng, grid, 3, 3, 0.7);
        block = (dir / "block.json").string();
        std::ofstream(block) << blockcov_to_json(b).dump(2);

        quotes = (dir / "quotes.csv").string();
        std::ofstream qf(quotes);
        qf << "t,T1,T2,style,r,price\n";
        Curve truth = schwartz_curve(kSpace, std::log(33.0), 1.2, std::log(30.0), 0.3, 3.0);
        for (int i = 0; i < 8; ++i) {
            double t1 = 0.25 * i + 0.05, t2 = t1 + 0.25;
            ContractSpec c(t1, t2, DeliveryWeight::uniform(0.25));
            qf << "0.0," << t1 << "," << t2 << ",uniform,," << std::setprecision(17)
               << swap_price(truth, c, 0.0) << "\n";
        }
    }
    ~Fixture() { fs::remove_all(dir); }
};

} // namespace

TEST_CASE("price call matches the library bit for bit") {
    Fixture fx;
    CliResult r = run({"--config", fx.config, "--json", "price", "call", "--curve", fx.curve,
                       "--t", "0.1", "--tau", "0.6", "--T1", "0.9", "--T2", "1.15", "--K", "28",
                       "--r", "0.04"});
    REQUIRE(r.code == 0);
    nlohmann::json j = r.json();

    Curve g = load_curve(fx.curve);
    ContractSpec contract(0.9, 1.15, DeliveryWeight::uniform(1.15 - 0.9));
    PricingRequest req;
    req.t = 0.1;
    req.tau = 0.6;
    req.rate = 0.04;
    req.payoff = Payoff::call(28.0);
    PriceResult want = price_european_gaussian(g, *fx.cfg.sigma, *fx.cfg.q, contract, req);
    CHECK(j["price"].get<double>() == want.price);
    CHECK(j["m"].get<double>() == want.diag.m);
    CHECK(j["xi2"].get<double>() == want.diag.xi2);
}

TEST_CASE("validation failures exit with code 1 and name the constraint") {
    Fixture fx;
    CliResult r = run({"--config", fx.config, "price", "call", "--curve", fx.curve, "--t", "0.1",
                       "--tau", "1.0", "--T1", "0.9", "--T2", "1.15", "--K", "28"});
    CHECK(r.code == 1);
    CHECK(r.err.find("t <= tau <= T1") != std::string::npos);

    CliResult unknown = run({"price", "call", "--no-such-flag"});
    CHECK(unknown.code == 1);
    CHECK(unknown.err.find("Usage") != std::string::npos);

    CliResult missing = run({"price", "call", "--curve", fx.curve, "--t", "0", "--tau", "0.5",
                             "--T1", "0.9", "--T2", "1.15"});
    CHECK(missing.code == 1); // no config anywhere
}

TEST_CASE("cov-validate matches validate_block") {
    Fixture fx;
    CliResult r = run({"--config", fx.config, "--json", "cov-validate", "--block", fx.block});
    REQUIRE(r.code == 0);
    nlohmann::json j = r.json();
    BlockCov b = load_blockcov(fx.block, kSpace);
    BlockReport rep = validate_block(b);
    CHECK(j["valid"].get<bool>() == rep.valid);
    CHECK(j["spectral_norm"].get<double>() == rep.spectral_norm);
    CHECK(j["min_eig"].get<double>() == rep.min_eigenvalue);
}

TEST_CASE("delta report: q-mode directions and the sum rule") {
    Fixture fx;
    CliResult r = run({"--config", fx.config, "--json", "delta", "--curve", fx.curve,
                       "--use-q-modes", "2", "--t", "0.1", "--tau", "0.6", "--T1", "0.9",
                       "--T2", "1.15", "--K", "28"});
    REQUIRE(r.code == 0);
    nlohmann::json rows = r.json()["rows"];
    REQUIRE(rows.size() == 2);

    Curve g = load_curve(fx.curve);
    ContractSpec contract(0.9, 1.15, DeliveryWeight::uniform(1.15 - 0.9));
    PricingRequest req;
    req.t = 0.1;
    req.tau = 0.6;
    req.payoff = Payoff::call(28.0);
    // analytic per-direction value and the linear sum rule
    double sum = 0.0;
    for (int k = 0; k < 2; ++k) {
        DeltaResult want =
            delta_gateaux(g, fx.cfg.q->modes()[k], *fx.cfg.sigma, *fx.cfg.q, contract, req);
        CHECK(rows[k]["delta"].get<double>() == want.value);
        sum += want.value;
    }
    Curve both = combine(1.0, fx.cfg.q->modes()[0], 1.0, fx.cfg.q->modes()[1]);
    DeltaResult combined = delta_gateaux(g, both, *fx.cfg.sigma, *fx.cfg.q, contract, req);
    CHECK(combined.value == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("curve fit and show round trip through files") {
    Fixture fx;
    std::string out = (fx.dir / "fitted.json").string();
    CliResult r = run({"--config", fx.config, "--json", "curve-fit", "--quotes", fx.quotes,
                       "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.json()["max_abs_residual"].get<double>() <= 1e-8);

    CliResult show = run({"--json", "curve-show", "--curve", out, "--at", "0.5,1.0"});
    REQUIRE(show.code == 0);
    CHECK(show.json()["values"].size() == 2);
}

TEST_CASE("simulate writes a reproducible probe dump") {
    Fixture fx;
    std::string csv1 = (fx.dir / "paths1.csv").string();
    std::string csv2 = (fx.dir / "paths2.csv").string();
    std::vector<std::string> base{"--config", fx.config, "--json", "simulate", "--curve",
                                  fx.curve,  "--t1",     "0.5",    "--steps", "8",
                                  "--paths", "5",        "--probes", "0.25,0.5"};
    std::vector<std::string> a1 = base;
    a1.push_back("--out");
    a1.push_back(csv1);
    std::vector<std::string> a2 = base;
    a2.push_back("--out");
    a2.push_back(csv2);
    CHECK(run(a1).code == 0);
    CHECK(run(a2).code == 0);
    std::ifstream f1(csv1), f2(csv2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().find("path_id,step,time,probe_x,value") == 0);
    // 5 paths x 8 steps x 2 probes data lines + header
    int lines = 0;
    for (char ch : s1.str())
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + 5 * 8 * 2);
}

TEST_CASE("price subcommands: spread, margrabe, quanto, nig run end to end") {
    Fixture fx;
    CliResult spr = run({"--config", fx.config, "--json", "price", "spread", "--curve", fx.curve,
                         "--t", "0.0", "--tau", "0.5", "--T1", "0.9", "--T2", "1.15", "--T1b",
                         "1.2", "--T2b", "1.45", "--K", "0.5"});
    REQUIRE(spr.code == 0);
    CHECK(spr.json()["price"].get<double>() >= 0.0);

    CliResult nig = run({"--config", fx.config, "--json", "price", "nig", "--curve", fx.curve,
                         "--t", "0.0", "--tau", "0.5", "--T1", "0.9", "--T2", "1.15", "--K",
                         "30"});
    REQUIRE(nig.code == 0);

    // geometric legs need positive forwards: store log-curves
    std::mt19937 rng(523);
    Curve l1 = tsup::random_curve(kSpace, rng, tsup::working_grid(2.0, 8), 1.2, 0.3);
    Curve l2 = tsup::random_curve(kSpace, rng, tsup::working_grid(2.0, 8), 1.0, 0.3);
    std::string lc1 = (fx.dir / "log1.json").string(), lc2 = (fx.dir / "log2.json").string();
    save_curve(l1, lc1);
    save_curve(l2, lc2);
    CliResult mgr = run({"--config", fx.config, "--json", "price", "margrabe", "--curve", lc1,
                         "--curve2", lc2, "--block", fx.block, "--t", "0.0", "--tau", "0.5",
                         "--T", "1.0"});
    REQUIRE(mgr.code == 0);
    CHECK(mgr.json()["price"].get<double>() >= 0.0);

    CliResult qto = run({"--config", fx.config, "--json", "price", "quanto", "--curve", fx.curve,
                         "--curve2", fx.curve2, "--block", fx.block, "--t", "0.0", "--tau",
                         "0.5", "--T1", "0.9", "--T2", "1.15", "--K", "28", "--K2", "20"});
    REQUIRE(qto.code == 0);
    CHECK(qto.json()["price"].get<double>() >= 0.0);
}
