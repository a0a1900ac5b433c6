#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zeno/errors.hpp"
#include "zeno/experiments.hpp"

namespace ex = zeno::experiments;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kInvariant = 3 };

// Flags shared by every run subcommand, mapped onto config keys.
struct Flags {
    std::map<std::string, std::string> values;
    bool log_time = false;
    std::string config;
    std::string out;

    void add(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }
};

void add_common(CLI::App* sub, Flags& f) {
    f.add(sub, "--gamma", "gamma", "decay width (energy unit)");
    f.add(sub, "--lambda", "lambda", "detector half-bandwidth, a number or inf");
    f.add(sub, "--sigma", "sigma", "detection efficiency");
    f.add(sub, "--tau", "tau", "pulse interval, a number or schulman (4 / sigma)");
    f.add(sub, "--t-max", "t_max", "last time of the grid");
    f.add(sub, "--points", "points", "number of grid points");
    sub->add_flag("--log-time", f.log_time, "geometric time spacing");
    f.add(sub, "--tol", "rel_tol", "relative quadrature tolerance");
    f.add(sub, "--precision", "precision", "significant digits in the CSV (default 12)");
    f.add(sub, "--model", "model", "pulsed, continuous, both, approx or large-lambda");
    f.add(sub, "--grid-points", "grid_points", "minimum spectral grid size");
    f.add(sub, "--e-max", "e_max", "spectral grid half-width (0 = automatic)");
    sub->add_option("--config", f.config, "file of key = value settings");
    sub->add_option("--out", f.out, "output CSV path (default stdout)");
}

int run_subcommand(const std::string& name, const Flags& flags) {
    ex::ExperimentConfig cfg = ex::preset(name);
    if (!flags.config.empty()) ex::apply_config_file(cfg, flags.config);
    for (const auto& [key, value] : flags.values) ex::apply_setting(cfg, key, value);
    if (flags.log_time) cfg.time.log_spacing = true;
    cfg.validate();
    const std::string csv = ex::format_csv(ex::run(name, cfg), cfg);
    if (flags.out.empty()) {
        std::cout << csv;
    } else {
        ex::write_atomic(flags.out, csv);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survival and no-click probabilities of a decaying state under pulsed and continuous measurement"};
    app.set_version_flag("--version", std::string(ex::kVersion));
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> runs = {
        {"fig1", "single-measurement click probability w(t) and w(t)/t for several bandwidths"},
        {"fig2", "asymptotic no-click probabilities versus bandwidth"},
        {"fig3", "no-click probability versus time, continuous against pulsed"},
        {"sweep", "observables along a parameter axis"},
        {"pulsed", "no-click probability under pulsed measurement"},
        {"continuous", "survival, undetected decay and no-click probability under continuous measurement"},
        {"compare", "no-click curves of several models on one grid"},
    };
    std::map<std::string, Flags> flags;
    for (const auto& [name, help] : runs) {
        auto* sub = app.add_subcommand(name, help);
        auto& f = flags[name];
        add_common(sub, f);
        if (name == "fig1") f.add(sub, "--lambdas", "lambdas", "comma-separated bandwidths");
        if (name == "fig2") {
            f.add(sub, "--taus", "taus", "comma-separated pulse intervals");
            f.add(sub, "--lambda-min", "lambda_min", "first bandwidth");
            f.add(sub, "--lambda-max", "lambda_max", "last bandwidth");
        }
        if (name == "fig3") f.add(sub, "--sigmas", "sigmas", "comma-separated efficiencies, one panel each");
        if (name == "sweep") {
            f.add(sub, "--axis", "axis", "lambda, sigma or tau");
            f.add(sub, "--from", "from", "first axis value");
            f.add(sub, "--to", "to", "last axis value (inclusive)");
            f.add(sub, "--step", "step", "axis increment");
            f.add(sub, "--observables", "observables",
                  "comma-separated: effective_width, noclick_c_inf, noclick_c_inf_large_sigma, noclick_bb_inf, "
                  "w_lambda_inf, noclick_c_t, noclick_bb_t, noclick_approx_t, noclick_large_lambda_t");
            f.add(sub, "--times", "times", "comma-separated times for the *_t observables");
        }
    }

    ex::SelfcheckOptions check_opts;
    auto* selfcheck = app.add_subcommand("selfcheck", "run the built-in invariant checks");
    selfcheck->add_option("--tighten", check_opts.tighten, "divide all tolerances by this factor");
    selfcheck->add_flag("--misbranch", check_opts.misbranch, "evaluate the self-energy on the wrong branch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (selfcheck->parsed()) {
            const auto checks = ex::run_selfcheck(check_opts);
            bool ok = true;
            for (const auto& c : checks) {
                std::cout << ex::format_check(c) << "\n";
                ok = ok && c.passed;
            }
            return ok ? kOk : kInvariant;
        }
        for (const auto& [name, help] : runs) {
            if (app.got_subcommand(name)) return run_subcommand(name, flags[name]);
        }
    } catch (const ex::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const zeno::InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << "\n";
        return kInvariant;
    } catch (const zeno::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
