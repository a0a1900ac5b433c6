#include "zeno/experiments.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "zeno/continuous.hpp"
#include "zeno/errors.hpp"
#include "zeno/pulsed.hpp"

namespace zeno::experiments {

namespace {

std::string number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string number(const Bandwidth& b) { return b.is_infinite() ? "inf" : number(b.value()); }

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

double parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError("invalid number '" + std::string(text) + "' for " + std::string(key));
    }
    return v;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
    text = trim(text);
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError("invalid count '" + std::string(text) + "' for " + std::string(key));
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "1" || text == "true" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "no") return false;
    throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

Bandwidth parse_bandwidth(std::string_view key, std::string_view text) {
    const double v = parse_number(key, text);
    if (std::isinf(v) && v > 0) return Bandwidth::infinite();
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive or inf");
    return Bandwidth::finite(v);
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += fmt(items[i]);
    }
    return out;
}

std::string label(double v) { return number(v); }

// Grid large enough that t_max * spacing stays within the phase-step limit.
Tolerances tolerances_for(const ExperimentConfig& cfg, const SystemParams& sys, const DetectorParams& det,
                          double t_max) {
    Tolerances tol = cfg.tol;
    if (det.lambda.is_infinite()) return tol;
    const double e_max = tol.e_max > 0.0 ? tol.e_max : continuous::default_e_max(sys, det);
    const double needed = 2.0 * e_max * t_max / tol.max_phase_step;
    while (static_cast<double>(tol.grid_points - 1) < needed) tol.grid_points *= 2;
    return tol;
}

double last_time(const std::vector<double>& times) { return times.empty() ? 0.0 : times.back(); }

Column column(std::string name, bool probability, std::vector<double> values) {
    return Column{std::move(name), probability, std::move(values)};
}

std::vector<double> noclick_continuous(const ExperimentConfig& cfg, const std::vector<double>& times,
                                       const SystemParams& sys, const DetectorParams& det) {
    const continuous::Model model(sys, det, tolerances_for(cfg, sys, det, last_time(times)));
    return continuous::noclick_c(times, model).values;
}

std::vector<double> exp_decay(const std::vector<double>& times, const SystemParams& sys) {
    std::vector<double> out;
    for (double t : times) out.push_back(survival_prob_free(t, sys));
    return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::pulsed: return "pulsed";
        case ModelKind::continuous: return "continuous";
        case ModelKind::both: return "both";
        case ModelKind::approx: return "approx";
        case ModelKind::large_lambda: return "large-lambda";
    }
    return "both";
}

ModelKind parse_model(std::string_view text) {
    text = trim(text);
    if (text == "pulsed") return ModelKind::pulsed;
    if (text == "continuous") return ModelKind::continuous;
    if (text == "both") return ModelKind::both;
    if (text == "approx") return ModelKind::approx;
    if (text == "large-lambda") return ModelKind::large_lambda;
    throw ConfigError("unknown model '" + std::string(text) +
                      "' (expected pulsed, continuous, both, approx or large-lambda)");
}

std::vector<double> TimeGrid::build() const {
    if (points < 2) throw ConfigError("time grid needs at least 2 points");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be positive and finite");
    std::vector<double> out(points);
    const double last = static_cast<double>(points - 1);
    if (log_spacing) {
        const double lo = std::log(t_max * 1e-4);
        const double hi = std::log(t_max);
        for (std::size_t i = 0; i < points; ++i) out[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / last);
    } else {
        for (std::size_t i = 0; i < points; ++i) out[i] = t_max * static_cast<double>(i) / last;
    }
    out.back() = t_max;
    return out;
}

void ExperimentConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive and finite");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
    if (tau && (!(*tau > 0.0) || !std::isfinite(*tau))) throw ConfigError("tau must be positive and finite");
    if (time.points < 2) throw ConfigError("points must be >= 2");
    if (!(time.t_max > 0.0) || !std::isfinite(time.t_max)) throw ConfigError("t_max must be positive and finite");
    if (precision < 1 || precision > 17) throw ConfigError("precision must be between 1 and 17");
    if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || !std::isfinite(lambda_max)) {
        throw ConfigError("need 0 < lambda_min < lambda_max < inf");
    }
    for (double t : taus) {
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("taus must be positive and finite");
    }
    for (double s : sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigmas must be finite and >= 0");
    }
    for (double t : times) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("times must be finite and >= 0");
    }
    if (axis != "lambda" && axis != "sigma" && axis != "tau") {
        throw ConfigError("sweep axis must be lambda, sigma or tau");
    }
    try {
        tol.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

double ExperimentConfig::pulse_interval(double sigma_value) const {
    if (tau) return *tau;
    if (!(sigma_value > 0.0)) throw ConfigError("tau = schulman needs sigma > 0");
    return 4.0 / sigma_value;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << "model=" << to_string(model) << " gamma=" << number(gamma) << " lambda=" << number(lambda)
       << " sigma=" << number(sigma) << " tau=" << (tau ? number(*tau) : std::string("schulman"))
       << " t_max=" << number(time.t_max) << " points=" << time.points << " log_time=" << (time.log_spacing ? 1 : 0)
       << " rel_tol=" << number(tol.rel_tol) << " abs_tol=" << number(tol.abs_tol)
       << " kspace_tol=" << number(tol.kspace_abs_tol) << " grid_points=" << tol.grid_points
       << " e_max=" << number(tol.e_max) << " precision=" << precision
       << " lambdas=" << join(lambdas, [](const Bandwidth& b) { return number(b); })
       << " taus=" << join(taus, label) << " lambda_min=" << number(lambda_min)
       << " lambda_max=" << number(lambda_max) << " sigmas=" << join(sigmas, label) << " axis=" << axis
       << " from=" << number(from) << " to=" << number(to) << " step=" << number(step)
       << " observables=" << join(observables, [](const std::string& s) { return s; })
       << " times=" << join(times, label);
    return os.str();
}

ExperimentConfig preset(std::string_view subcommand) {
    ExperimentConfig cfg;
    cfg.lambdas = {Bandwidth::finite(1.0), Bandwidth::finite(3.0), Bandwidth::finite(10.0), Bandwidth::infinite()};
    cfg.taus = {0.1, 0.5, 1.0};
    cfg.sigmas = {40.0, 3.0};
    cfg.observables = {"effective_width", "noclick_c_inf"};
    cfg.times = {1.0};
    if (subcommand == "fig1") {
        cfg.time = {10.0, 200, false};
    } else if (subcommand == "fig2") {
        cfg.time = {10.0, 200, true};
    } else if (subcommand == "fig3") {
        cfg.time = {10.0, 400, false};
    } else if (subcommand == "sweep") {
        cfg.time = {10.0, 200, false};
    } else if (subcommand == "pulsed") {
        cfg.model = ModelKind::pulsed;
        cfg.time = {10.0, 200, false};
    } else if (subcommand == "continuous") {
        cfg.model = ModelKind::continuous;
        cfg.time = {10.0, 100, false};
    } else if (subcommand == "compare") {
        cfg.time = {10.0, 100, false};
    } else if (subcommand != "selfcheck") {
        throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
    }
    return cfg;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "model") {
        cfg.model = parse_model(value);
    } else if (key == "gamma") {
        cfg.gamma = parse_number(key, value);
    } else if (key == "lambda") {
        cfg.lambda = parse_bandwidth(key, value);
    } else if (key == "sigma") {
        cfg.sigma = parse_number(key, value);
    } else if (key == "tau") {
        if (value == "schulman") {
            cfg.tau.reset();
        } else {
            cfg.tau = parse_number(key, value);
        }
    } else if (key == "t_max") {
        cfg.time.t_max = parse_number(key, value);
    } else if (key == "points") {
        cfg.time.points = parse_count(key, value);
    } else if (key == "log_time") {
        cfg.time.log_spacing = parse_bool(key, value);
    } else if (key == "rel_tol" || key == "tol") {
        cfg.tol.rel_tol = parse_number(key, value);
    } else if (key == "abs_tol") {
        cfg.tol.abs_tol = parse_number(key, value);
    } else if (key == "kspace_tol") {
        cfg.tol.kspace_abs_tol = parse_number(key, value);
    } else if (key == "grid_points") {
        cfg.tol.grid_points = parse_count(key, value);
    } else if (key == "e_max") {
        cfg.tol.e_max = parse_number(key, value);
    } else if (key == "precision") {
        cfg.precision = static_cast<int>(parse_count(key, value));
    } else if (key == "lambdas") {
        cfg.lambdas.clear();
        for (auto item : split_list(value)) cfg.lambdas.push_back(parse_bandwidth(key, item));
    } else if (key == "taus") {
        cfg.taus.clear();
        for (auto item : split_list(value)) cfg.taus.push_back(parse_number(key, item));
    } else if (key == "lambda_min") {
        cfg.lambda_min = parse_number(key, value);
    } else if (key == "lambda_max") {
        cfg.lambda_max = parse_number(key, value);
    } else if (key == "sigmas") {
        cfg.sigmas.clear();
        for (auto item : split_list(value)) cfg.sigmas.push_back(parse_number(key, item));
    } else if (key == "axis") {
        cfg.axis = std::string(value);
    } else if (key == "from") {
        cfg.from = parse_number(key, value);
    } else if (key == "to") {
        cfg.to = parse_number(key, value);
    } else if (key == "step") {
        cfg.step = parse_number(key, value);
    } else if (key == "observables") {
        cfg.observables.clear();
        for (auto item : split_list(value)) cfg.observables.emplace_back(item);
    } else if (key == "times") {
        cfg.times.clear();
        for (auto item : split_list(value)) cfg.times.push_back(parse_number(key, item));
    } else {
        throw ConfigError("unknown setting '" + std::string(key) + "'");
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

// ---------------------------------------------------------------------------

Dataset run_fig1(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.lambdas.empty()) throw ConfigError("fig1 needs at least one lambda");
    const SystemParams sys(cfg.gamma);
    const auto times = cfg.time.build();
    Dataset data{"fig1", {column("t", false, times)}};
    std::vector<Column> insert;
    for (const auto& lam : cfg.lambdas) {
        const DetectorParams det(lam, 0.0);
        std::vector<double> ratio, w;
        for (double t : times) {
            const double value = pulsed::w_lambda(t, sys, det, cfg.tol);
            w.push_back(value);
            // t -> 0 limit of w / t: gamma for the infinite band, 0 otherwise.
            ratio.push_back(t > 0.0 ? value / t : (lam.is_infinite() ? sys.gamma() : 0.0));
        }
        data.columns.push_back(column("ratio_lambda_" + number(lam), false, std::move(ratio)));
        insert.push_back(column("w_lambda_" + number(lam), true, std::move(w)));
    }
    for (auto& c : insert) data.columns.push_back(std::move(c));
    return data;
}

Dataset run_fig2(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams sys(cfg.gamma);
    std::vector<double> lambdas(cfg.time.points);
    const double last = static_cast<double>(cfg.time.points - 1);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double f = static_cast<double>(i) / last;
        lambdas[i] = cfg.time.log_spacing
                         ? std::exp(std::log(cfg.lambda_min) + f * (std::log(cfg.lambda_max) - std::log(cfg.lambda_min)))
                         : cfg.lambda_min + f * (cfg.lambda_max - cfg.lambda_min);
    }
    lambdas.back() = cfg.lambda_max;
    Dataset data{"fig2", {column("lambda", false, lambdas)}};
    std::vector<double> cont;
    for (double lam : lambdas) {
        cont.push_back(continuous::noclick_c_inf_large_sigma(sys, DetectorParams(Bandwidth::finite(lam), cfg.sigma)));
    }
    data.columns.push_back(column("noclick_c_inf_large_sigma", true, std::move(cont)));
    for (double tau : cfg.taus) {
        std::vector<double> bb;
        for (double lam : lambdas) {
            bb.push_back(pulsed::noclick_bb_inf(sys, DetectorParams(Bandwidth::finite(lam), cfg.sigma, tau), cfg.tol));
        }
        data.columns.push_back(column("noclick_bb_inf_tau_" + number(tau), true, std::move(bb)));
    }
    return data;
}

Dataset run_fig3(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sigmas.empty()) throw ConfigError("fig3 needs at least one sigma");
    const SystemParams sys(cfg.gamma);
    const auto times = cfg.time.build();
    Dataset data{"fig3", {column("t", false, times)}};
    for (double sigma : cfg.sigmas) {
        const DetectorParams det(cfg.lambda, sigma, cfg.pulse_interval(sigma));
        data.columns.push_back(
            column("noclick_c_sigma_" + number(sigma), true, noclick_continuous(cfg, times, sys, det)));
        data.columns.push_back(
            column("noclick_bb_sigma_" + number(sigma), true, pulsed::noclick_bb(times, sys, det, cfg.tol).values));
    }
    data.columns.push_back(column("exp_decay", true, exp_decay(times, sys)));
    return data;
}

Dataset run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!(cfg.step > 0.0) || !(cfg.to >= cfg.from) || !std::isfinite(cfg.from) || !std::isfinite(cfg.to)) {
        throw ConfigError("sweep range is empty: need step > 0 and to >= from");
    }
    if (cfg.observables.empty()) throw ConfigError("sweep needs at least one observable");
    std::vector<double> axis;
    const auto count = static_cast<std::size_t>(std::floor((cfg.to - cfg.from) / cfg.step * (1.0 + 1e-12))) + 1;
    for (std::size_t i = 0; i < count; ++i) axis.push_back(cfg.from + static_cast<double>(i) * cfg.step);

    const SystemParams sys(cfg.gamma);
    auto detector_at = [&](double x) {
        ExperimentConfig c = cfg;
        if (cfg.axis == "lambda") c.lambda = parse_bandwidth("lambda", number(x));
        if (cfg.axis == "sigma") c.sigma = x;
        if (cfg.axis == "tau") c.tau = x;
        std::optional<double> tau;
        if (c.tau || c.sigma > 0.0) tau = c.pulse_interval(c.sigma);
        return DetectorParams(c.lambda, c.sigma, tau);
    };

    Dataset data{"sweep", {column(cfg.axis, false, axis)}};
    for (const auto& obs : cfg.observables) {
        const bool timed = obs == "noclick_c_t" || obs == "noclick_bb_t" || obs == "noclick_approx_t" ||
                           obs == "noclick_large_lambda_t";
        if (!timed) {
            std::vector<double> values;
            bool probability = true;
            for (double x : axis) {
                const DetectorParams det = detector_at(x);
                if (obs == "effective_width") {
                    values.push_back(continuous::effective_width(sys, det));
                    probability = false;
                } else if (obs == "noclick_c_inf") {
                    values.push_back(continuous::noclick_c_inf(sys, det, cfg.tol));
                } else if (obs == "noclick_c_inf_large_sigma") {
                    values.push_back(continuous::noclick_c_inf_large_sigma(sys, det));
                } else if (obs == "noclick_bb_inf") {
                    values.push_back(pulsed::noclick_bb_inf(sys, det, cfg.tol));
                } else if (obs == "w_lambda_inf") {
                    values.push_back(pulsed::w_lambda_inf(sys, det));
                } else {
                    throw ConfigError("unknown observable '" + obs + "'");
                }
            }
            data.columns.push_back(column(obs, probability, std::move(values)));
            continue;
        }
        if (cfg.times.empty()) throw ConfigError("observable " + obs + " needs a times list");
        std::vector<double> times = cfg.times;
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        std::vector<std::vector<double>> per_time(times.size());
        for (double x : axis) {
            const DetectorParams det = detector_at(x);
            std::vector<double> row;
            if (obs == "noclick_c_t") row = noclick_continuous(cfg, times, sys, det);
            if (obs == "noclick_bb_t") row = pulsed::noclick_bb(times, sys, det, cfg.tol).values;
            if (obs == "noclick_approx_t") row = continuous::noclick_c_approx(times, sys, det, cfg.tol).values;
            if (obs == "noclick_large_lambda_t") row = continuous::noclick_c_large_lambda(times, sys, det).values;
            for (std::size_t j = 0; j < times.size(); ++j) per_time[j].push_back(row[j]);
        }
        const std::string base = obs.substr(0, obs.size() - 2);
        for (std::size_t j = 0; j < times.size(); ++j) {
            data.columns.push_back(column(base + "@t=" + number(times[j]), true, std::move(per_time[j])));
        }
    }
    return data;
}

Dataset run_pulsed(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams sys(cfg.gamma);
    const DetectorParams det(cfg.lambda, cfg.sigma, cfg.pulse_interval(cfg.sigma));
    const auto times = cfg.time.build();
    Dataset data{"pulsed", {column("t", false, times)}};
    data.columns.push_back(column("noclick_bb", true, pulsed::noclick_bb(times, sys, det, cfg.tol).values));
    data.columns.push_back(column("exp_decay", true, exp_decay(times, sys)));
    return data;
}

Dataset run_continuous(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams sys(cfg.gamma);
    const DetectorParams det(cfg.lambda, cfg.sigma);
    const auto times = cfg.time.build();
    Dataset data{"continuous", {column("t", false, times)}};
    switch (cfg.model) {
        case ModelKind::approx:
            data.columns.push_back(
                column("noclick_c_approx", true, continuous::noclick_c_approx(times, sys, det, cfg.tol).values));
            break;
        case ModelKind::large_lambda:
            data.columns.push_back(
                column("noclick_c_large_lambda", true, continuous::noclick_c_large_lambda(times, sys, det).values));
            break;
        case ModelKind::continuous:
        case ModelKind::both: {
            const continuous::Model model(sys, det, tolerances_for(cfg, sys, det, last_time(times)));
            std::vector<double> p, w, n;
            for (double t : times) {
                p.push_back(model.survival_prob(t));
                w.push_back(model.w(t));
                n.push_back(p.back() + w.back());
            }
            data.columns.push_back(column("survival_c", true, std::move(p)));
            data.columns.push_back(column("w_c", true, std::move(w)));
            data.columns.push_back(column("noclick_c", true, std::move(n)));
            break;
        }
        case ModelKind::pulsed:
            throw ConfigError("the continuous subcommand does not run the pulsed model (use pulsed or compare)");
    }
    data.columns.push_back(column("exp_decay", true, exp_decay(times, sys)));
    return data;
}

Dataset run_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams sys(cfg.gamma);
    const auto times = cfg.time.build();
    Dataset data{"compare", {column("t", false, times)}};
    const bool with_bb = cfg.model == ModelKind::pulsed || cfg.model == ModelKind::both;
    std::optional<double> tau;
    if (with_bb) tau = cfg.pulse_interval(cfg.sigma);
    const DetectorParams det(cfg.lambda, cfg.sigma, tau);
    if (cfg.model != ModelKind::pulsed) {
        data.columns.push_back(column("noclick_c", true, noclick_continuous(cfg, times, sys, det)));
    }
    if (with_bb) data.columns.push_back(column("noclick_bb", true, pulsed::noclick_bb(times, sys, det, cfg.tol).values));
    if (cfg.model == ModelKind::approx) {
        data.columns.push_back(
            column("noclick_c_approx", true, continuous::noclick_c_approx(times, sys, det, cfg.tol).values));
    }
    if (cfg.model == ModelKind::large_lambda) {
        data.columns.push_back(
            column("noclick_c_large_lambda", true, continuous::noclick_c_large_lambda(times, sys, det).values));
    }
    data.columns.push_back(column("exp_decay", true, exp_decay(times, sys)));
    return data;
}

Dataset run(std::string_view subcommand, const ExperimentConfig& cfg) {
    if (subcommand == "fig1") return run_fig1(cfg);
    if (subcommand == "fig2") return run_fig2(cfg);
    if (subcommand == "fig3") return run_fig3(cfg);
    if (subcommand == "sweep") return run_sweep(cfg);
    if (subcommand == "pulsed") return run_pulsed(cfg);
    if (subcommand == "continuous") return run_continuous(cfg);
    if (subcommand == "compare") return run_compare(cfg);
    throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
}

// ---------------------------------------------------------------------------

std::string format_csv(const Dataset& data, const ExperimentConfig& cfg) {
    const std::size_t rows = data.rows();
    for (const auto& c : data.columns) {
        if (c.values.size() != rows) throw std::logic_error("dataset columns differ in length");
    }
    std::string out = "# zeno-lab v" + std::string(kVersion) + " " + data.subcommand + " " + cfg.canonical() + "\n";
    for (std::size_t j = 0; j < data.columns.size(); ++j) {
        if (j) out += ',';
        out += data.columns[j].name;
    }
    out += '\n';

    std::vector<std::string> clamped;
    char buf[64];
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < data.columns.size(); ++j) {
            const auto& c = data.columns[j];
            double v = c.values[i];
            if (c.probability) {
                if (!(v >= -kProbabilitySlack && v <= 1.0 + kProbabilitySlack)) {
                    throw InvariantError("probability " + number(v) + " in column " + c.name + " row " +
                                         std::to_string(i) + " lies outside [0, 1]");
                }
                if (v < 0.0 || v > 1.0) {
                    clamped.push_back(c.name + "[" + std::to_string(i) + "]=" + number(v));
                    v = std::clamp(v, 0.0, 1.0);
                }
            }
            if (j) out += ',';
            if (std::isinf(v)) {
                out += v > 0 ? "inf" : "-inf";
            } else {
                std::snprintf(buf, sizeof buf, "%.*g", cfg.precision, v);
                out += buf;
            }
        }
        out += '\n';
    }
    if (!clamped.empty()) {
        out += "# clamped " + std::to_string(clamped.size()) + ":";
        for (const auto& s : clamped) out += " " + s;
        out += '\n';
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignore;
        fs::remove(tmp, ignore);
        throw std::runtime_error("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------

namespace {

Check make_check(std::string name, double measured, double allowed) {
    Check c;
    c.name = std::move(name);
    c.measured = measured;
    c.allowed = allowed;
    c.passed = std::isfinite(measured) && measured <= allowed;
    return c;
}

template <typename F>
Check guarded(const std::string& name, double allowed, F&& measure) {
    try {
        return make_check(name, measure(), allowed);
    } catch (const std::exception& e) {
        Check c = make_check(name, std::numeric_limits<double>::infinity(), allowed);
        c.detail = e.what();
        return c;
    }
}

// Density from the self-energy without the sign guard, so a wrong branch shows up as a value.
double raw_density(const continuous::SelfEnergyFn& fn, double e) {
    const cdouble s = fn.one_sided(e);
    const cdouble g = 1.0 / (e + s);
    return -g.imag() / kPi;
}

}  // namespace

std::vector<Check> run_selfcheck(const SelfcheckOptions& options) {
    if (!(options.tighten > 0.0)) throw ConfigError("tightening factor must be positive");
    const double f = options.tighten;
    const Tolerances tol = Tolerances{}.tightened(f);
    const SystemParams sys(1.0);
    const auto branch = options.misbranch ? continuous::Branch::misbranched : continuous::Branch::retarded;
    const auto lam3 = Bandwidth::finite(3.0);
    std::vector<Check> checks;

    for (double sigma : {3.0, 40.0, 0.0}) {
        const DetectorParams det(lam3, sigma);
        checks.push_back(guarded("normalization lambda=3 sigma=" + number(sigma), 1e-5 / f, [&] {
            return std::abs(continuous::build_spectral_table(sys, det, tol, branch).mass() - 1.0);
        }));
    }
    for (double sigma : {3.0, 40.0}) {
        const DetectorParams det(lam3, sigma);
        checks.push_back(guarded("density nonnegative lambda=3 sigma=" + number(sigma), tol.abs_tol, [&] {
            const continuous::SelfEnergyFn fn(sys, det, tol, branch);
            const double e_max = continuous::default_e_max(sys, det);
            const std::size_t n = 20001;
            double lowest = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = -e_max + 2.0 * e_max * static_cast<double>(i) / static_cast<double>(n - 1);
                lowest = std::min(lowest, raw_density(fn, e));
            }
            return std::max(0.0, -lowest);
        }));
    }
    checks.push_back(guarded("density symmetric lambda=3 sigma=3", 1e-10 / f, [&] {
        const DetectorParams det(lam3, 3.0);
        const auto table = continuous::build_spectral_table(sys, det, tol, branch);
        const auto d = table.densities();
        double worst = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(d[i] - d[d.size() - 1 - i]));
        return worst;
    }));
    checks.push_back(guarded("lorentzian density at sigma=0", 1e-6 / f, [&] {
        const DetectorParams det(lam3, 0.0);
        double worst = 0.0;
        for (double e : {0.0, 1.0, -1.0, 5.0, -5.0}) {
            const double lorentz = 1.0 / (2.0 * kPi) / (e * e + 0.25);
            worst = std::max(worst, std::abs(continuous::spectral_density(e, sys, det, tol, branch) - lorentz));
        }
        return worst;
    }));
    checks.push_back(guarded("unitarity at sigma=0", 1e-4 / f, [&] {
        const continuous::Model model(sys, DetectorParams(lam3, 0.0), tol);
        double worst = 0.0;
        for (double t : {0.5, 1.0, 2.0, 5.0}) worst = std::max(worst, std::abs(model.noclick(t) - 1.0));
        return worst;
    }));
    checks.push_back(guarded("probability flux lambda=3 sigma=3 t=1", 1e-3 / f, [&] {
        const continuous::Model model(sys, DetectorParams(lam3, 3.0), tol);
        const double h = 1e-3;
        const double slope = (model.noclick(1.0 + h) - model.noclick(1.0 - h)) / (2.0 * h);
        const double rate = model.click_rate(1.0);
        return std::abs(slope + rate) / rate;
    }));
    checks.push_back(guarded("single-click saturation lambda=3", 1e-6 / f, [&] {
        const DetectorParams det(lam3, 0.0);
        return std::abs(pulsed::w_lambda(80.0, sys, det, tol) - pulsed::w_lambda_inf(sys, det));
    }));
    checks.push_back(guarded("pulsed curve exponential-affine", 1e-9 / f, [&] {
        const DetectorParams det(lam3, 0.0, 0.1);
        const std::vector<double> times = {0.5, 1.0, 2.0, 4.0};
        const auto curve = pulsed::noclick_bb(times, sys, det, tol);
        const double p_inf = pulsed::noclick_bb_inf(sys, det, tol);
        double worst = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double rate = -std::log((curve.values[i] - p_inf) / (1.0 - p_inf)) / times[i];
            worst = std::max(worst, std::abs(rate - sys.gamma()));
        }
        return worst;
    }));
    checks.push_back(guarded("effective width at sigma=0", 1e-12 / f, [&] {
        return std::abs(continuous::effective_width(sys, DetectorParams(lam3, 0.0)) - sys.gamma());
    }));
    checks.push_back(guarded("large-band limit at sigma=gamma", 1e-12 / f, [&] {
        const DetectorParams det(Bandwidth::infinite(), 1.0);
        return std::abs(continuous::noclick_c_large_lambda(1.0, sys, det) - 2.0 * std::exp(-1.0));
    }));
    return checks;
}

std::string format_check(const Check& check) {
    char buf[256];
    const double ratio = check.allowed > 0.0 ? check.measured / check.allowed : 0.0;
    std::snprintf(buf, sizeof buf, "%s %-44s measured=%.3e allowed=%.3e ratio=%.3g", check.passed ? "PASS" : "FAIL",
                  check.name.c_str(), check.measured, check.allowed, ratio);
    std::string out = buf;
    if (!check.detail.empty()) out += " (" + check.detail + ")";
    return out;
}

}  // namespace zeno::experiments
