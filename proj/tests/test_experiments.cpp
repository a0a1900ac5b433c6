#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zeno/continuous.hpp"
#include "zeno/errors.hpp"
#include "zeno/experiments.hpp"
#include "zeno/pulsed.hpp"

using namespace zeno;
namespace ex = zeno::experiments;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / ("zeno_lab_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("time grids") {
    ex::TimeGrid g{10.0, 5, false};
    const auto lin = g.build();
    REQUIRE(lin.size() == 5);
    CHECK(lin.front() == 0.0);
    CHECK(lin[1] == doctest::Approx(2.5));
    CHECK(lin.back() == 10.0);
    g.log_spacing = true;
    const auto geo = g.build();
    CHECK(geo.front() == doctest::Approx(1e-3));
    CHECK(geo[2] / geo[1] == doctest::Approx(geo[1] / geo[0]));
    CHECK(geo.back() == 10.0);
    g.points = 1;
    CHECK_THROWS_AS(g.build(), ex::ConfigError);
}

TEST_CASE("settings parse and echo canonically") {
    auto cfg = ex::preset("fig3");
    CHECK(cfg.time.points == 400);
    CHECK(cfg.time.t_max == 10.0);
    CHECK(cfg.sigmas == std::vector<double>{40.0, 3.0});
    ex::apply_setting(cfg, "lambda", "inf");
    CHECK(cfg.lambda.is_infinite());
    ex::apply_setting(cfg, " tau ", " 0.25 ");
    CHECK(cfg.tau == 0.25);
    ex::apply_setting(cfg, "tau", "schulman");
    CHECK_FALSE(cfg.tau.has_value());
    CHECK(cfg.pulse_interval(40.0) == doctest::Approx(0.1));
    ex::apply_setting(cfg, "model", "large-lambda");
    CHECK(cfg.model == ex::ModelKind::large_lambda);
    ex::apply_setting(cfg, "lambdas", "1, 2.5,inf");
    CHECK(cfg.lambdas.size() == 3);
    CHECK(cfg.lambdas[2].is_infinite());

    const std::string echo = cfg.canonical();
    CHECK(echo.find("lambda=inf") != std::string::npos);
    CHECK(echo.find("tau=schulman") != std::string::npos);
    CHECK(echo.find("model=large-lambda") != std::string::npos);

    CHECK_THROWS_AS(ex::apply_setting(cfg, "colour", "red"), ex::ConfigError);
    CHECK_THROWS_AS(ex::apply_setting(cfg, "sigma", "fast"), ex::ConfigError);
    CHECK_THROWS_AS(ex::apply_setting(cfg, "points", "-3"), ex::ConfigError);
    CHECK_THROWS_AS(ex::apply_setting(cfg, "lambda", "-1"), ex::ConfigError);
    CHECK_THROWS_AS(ex::apply_setting(cfg, "model", "quantum"), ex::ConfigError);
    CHECK_THROWS_AS(ex::preset("fig9"), ex::ConfigError);

    cfg.sigma = 0.0;
    CHECK_THROWS_AS(cfg.pulse_interval(0.0), ex::ConfigError);
    cfg.precision = 30;
    CHECK_THROWS_AS(cfg.validate(), ex::ConfigError);
}

TEST_CASE("config files sit between presets and flags") {
    const auto dir = scratch_dir();
    const auto path = dir / "run.conf";
    {
        std::ofstream out(path);
        out << "# comment line\n\nsigma = 12   # trailing comment\nt_max=4\npoints = 9\n";
    }
    auto cfg = ex::preset("compare");
    ex::apply_config_file(cfg, path);
    CHECK(cfg.sigma == 12.0);
    CHECK(cfg.time.t_max == 4.0);
    CHECK(cfg.time.points == 9);
    ex::apply_setting(cfg, "points", "3");
    CHECK(cfg.time.points == 3);

    {
        std::ofstream out(path);
        out << "sigma 12\n";
    }
    CHECK_THROWS_AS(ex::apply_config_file(cfg, path), ex::ConfigError);
    CHECK_THROWS_AS(ex::apply_config_file(cfg, dir / "missing.conf"), ex::ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("csv layout") {
    auto cfg = ex::preset("pulsed");
    cfg.precision = 5;
    ex::Dataset data{"pulsed", {{"t", false, {0.0, 1.0}}, {"p", true, {1.0, 1.0 / 3.0}}, {"x", false, {INFINITY, 2.0}}}};
    const auto out = lines(ex::format_csv(data, cfg));
    REQUIRE(out.size() == 4);
    CHECK(out[0] == "# zeno-lab v" + std::string(ex::kVersion) + " pulsed " + cfg.canonical());
    CHECK(out[1] == "t,p,x");
    CHECK(out[2] == "0,1,inf");
    CHECK(out[3] == "1,0.33333,2");
}

TEST_CASE("probabilities are clamped within the slack and rejected beyond it") {
    const auto cfg = ex::preset("pulsed");
    ex::Dataset data{"pulsed", {{"t", false, {0.0, 1.0}}, {"p", true, {1.0 + 5e-10, -2e-10}}}};
    const auto out = lines(ex::format_csv(data, cfg));
    REQUIRE(out.size() == 5);
    CHECK(out[2] == "0,1");
    CHECK(out[3] == "1,0");
    CHECK(out[4].rfind("# clamped 2:", 0) == 0);

    data.columns[1].values[0] = 1.0 + 1e-6;
    CHECK_THROWS_AS(ex::format_csv(data, cfg), InvariantError);
    data.columns[1].values[0] = NAN;
    CHECK_THROWS_AS(ex::format_csv(data, cfg), InvariantError);
}

TEST_CASE("atomic writes replace the whole file") {
    const auto dir = scratch_dir();
    const auto path = dir / "out.csv";
    ex::write_atomic(path, "first\n");
    ex::write_atomic(path, "second\n");
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    CHECK(all == "second\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    CHECK_THROWS(ex::write_atomic(dir / "no_such_dir" / "x.csv", "x"));
    fs::remove_all(dir);
}

TEST_CASE("fig1 columns") {
    auto cfg = ex::preset("fig1");
    cfg.time = {40.0, 5, false};
    const auto data = ex::run_fig1(cfg);
    REQUIRE(data.columns.size() == 9);
    CHECK(data.columns[4].name == "ratio_lambda_inf");
    CHECK(data.columns[8].name == "w_lambda_inf");
    const SystemParams sys(1.0);
    for (std::size_t i = 1; i < data.rows(); ++i) {
        const double t = data.columns[0].values[i];
        CHECK(data.columns[4].values[i] == doctest::Approx((1.0 - std::exp(-t)) / t));
    }
    CHECK(data.columns[4].values[0] == 1.0);
    for (std::size_t j = 1; j <= 3; ++j) CHECK(data.columns[j].values[0] == 0.0);
    // The insert saturates.
    CHECK(data.columns[6].values.back() == doctest::Approx(2.0 / kPi * std::atan(6.0)).epsilon(1e-9));
    // Quadratic onset shows up as a ratio proportional to t.
    cfg.time = {1e-3, 3, false};
    const auto early = ex::run_fig1(cfg);
    CHECK(early.columns[2].values[2] / early.columns[2].values[1] == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("fig2 columns") {
    auto cfg = ex::preset("fig2");
    cfg.time.points = 3;
    cfg.lambda_min = 3.0;
    cfg.lambda_max = 50.0;
    const auto data = ex::run_fig2(cfg);
    REQUIRE(data.columns.size() == 5);
    CHECK(data.columns[1].values[0] == doctest::Approx(0.1051369134).epsilon(1e-9));
    // tau = 1 at lambda = 50.
    CHECK(data.columns[4].values.back() < 0.02);
    // Small tau keeps the pulsed saturation above the continuous one.
    for (std::size_t i = 0; i < data.rows(); ++i) CHECK(data.columns[2].values[i] >= data.columns[1].values[i]);
}

TEST_CASE("fig3 panels") {
    auto cfg = ex::preset("fig3");
    cfg.time = {0.2, 5, false};
    const auto data = ex::run_fig3(cfg);
    REQUIRE(data.columns.size() == 6);
    CHECK(data.columns[1].name == "noclick_c_sigma_40");
    CHECK(data.columns[4].name == "noclick_bb_sigma_3");
    CHECK(data.columns[5].name == "exp_decay");
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double e = data.columns[5].values[i];
        for (std::size_t j = 1; j <= 4; ++j) CHECK(data.columns[j].values[i] >= e - 1e-12);
        CHECK(std::abs(data.columns[1].values[i] - data.columns[2].values[i]) < 0.02);
    }
}

TEST_CASE("sweeps") {
    auto cfg = ex::preset("sweep");
    cfg.axis = "sigma";
    cfg.from = 1.0;
    cfg.to = 5.0;
    cfg.step = 1.0;
    cfg.observables = {"effective_width", "noclick_bb_inf", "noclick_large_lambda_t"};
    cfg.times = {0.5, 1.0};
    const auto data = ex::run_sweep(cfg);
    REQUIRE(data.rows() == 5);
    REQUIRE(data.columns.size() == 5);
    CHECK(data.columns[4].name == "noclick_large_lambda@t=1");
    for (std::size_t i = 1; i < data.rows(); ++i) CHECK(data.columns[1].values[i] < data.columns[1].values[i - 1]);

    cfg.axis = "tau";
    cfg.from = 0.1;
    cfg.to = 1.0;
    cfg.step = 0.1;
    cfg.observables = {"noclick_bb_inf"};
    const auto taus = ex::run_sweep(cfg);
    CHECK(taus.rows() == 10);
    for (std::size_t i = 1; i < taus.rows(); ++i) CHECK(taus.columns[1].values[i] < taus.columns[1].values[i - 1]);

    cfg.to = 0.0;
    CHECK_THROWS_AS(ex::run_sweep(cfg), ex::ConfigError);
    cfg.to = 1.0;
    cfg.step = 0.0;
    CHECK_THROWS_AS(ex::run_sweep(cfg), ex::ConfigError);
    cfg.step = 0.1;
    cfg.observables = {"bogus"};
    CHECK_THROWS_AS(ex::run_sweep(cfg), ex::ConfigError);
}

TEST_CASE("single-model subcommands") {
    auto cfg = ex::preset("continuous");
    cfg.time = {1.0, 3, false};
    cfg.sigma = 3.0;
    const auto c = ex::run_continuous(cfg);
    REQUIRE(c.columns.size() == 5);
    for (std::size_t i = 0; i < c.rows(); ++i) {
        CHECK(c.columns[3].values[i] == doctest::Approx(c.columns[1].values[i] + c.columns[2].values[i]));
    }
    cfg.model = ex::ModelKind::pulsed;
    CHECK_THROWS_AS(ex::run_continuous(cfg), ex::ConfigError);

    auto cmp = ex::preset("compare");
    cmp.time = {1.0, 3, false};
    cmp.model = ex::ModelKind::approx;
    const auto a = ex::run_compare(cmp);
    CHECK(a.columns[1].name == "noclick_c");
    CHECK(a.columns[2].name == "noclick_c_approx");

    auto p = ex::preset("pulsed");
    p.time = {1.0, 3, false};
    const auto bb = ex::run_pulsed(p);
    CHECK(bb.columns[1].values[2] > bb.columns[2].values[2]);
}

TEST_CASE("identical configs give identical files") {
    auto cfg = ex::preset("fig3");
    cfg.time = {2.0, 4, false};
    const auto first = ex::format_csv(ex::run("fig3", cfg), cfg);
    const auto second = ex::format_csv(ex::run("fig3", cfg), cfg);
    CHECK(first == second);
}

TEST_CASE("selfcheck") {
    const auto checks = ex::run_selfcheck();
    for (const auto& c : checks) {
        INFO(ex::format_check(c));
        CHECK(c.passed);
    }

    ex::SelfcheckOptions tight;
    tight.tighten = 100.0;
    const auto tightened = ex::run_selfcheck(tight);
    REQUIRE(tightened.size() == checks.size());
    CHECK(tightened[0].name == checks[0].name);
    CHECK(tightened[0].measured / tightened[0].allowed > checks[0].measured / checks[0].allowed);

    ex::SelfcheckOptions bad;
    bad.misbranch = true;
    bool negative_density_flagged = false;
    for (const auto& c : ex::run_selfcheck(bad)) {
        if (c.name.rfind("density nonnegative", 0) == 0 && !c.passed) negative_density_flagged = true;
    }
    CHECK(negative_density_flagged);
    CHECK(ex::format_check(checks[0]).rfind("PASS ", 0) == 0);
}

TEST_CASE("doubling the spectral grid leaves fig3 values within rel_tol") {
    auto cfg = ex::preset("fig3");
    cfg.time = {2.0, 5, false};
    const auto coarse = ex::run_fig3(cfg);
    cfg.tol.grid_points *= 2;
    const auto fine = ex::run_fig3(cfg);
    for (std::size_t j = 0; j < coarse.columns.size(); ++j) {
        for (std::size_t i = 0; i < coarse.rows(); ++i) {
            CHECK(std::abs(coarse.columns[j].values[i] - fine.columns[j].values[i]) <= cfg.tol.rel_tol);
        }
    }
}
