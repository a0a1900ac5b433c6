#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zeno/model.hpp"

namespace zeno::experiments {

inline constexpr std::string_view kVersion = "0.1.0";

/// Bad flag, bad config line or inconsistent parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { pulsed, continuous, both, approx, large_lambda };

std::string to_string(ModelKind kind);
ModelKind parse_model(std::string_view text);

struct TimeGrid {
    double t_max = 10.0;
    std::size_t points = 400;
    /// Geometric spacing from t_max / 10^4 to t_max instead of linear from 0.
    bool log_spacing = false;

    std::vector<double> build() const;
};

struct ExperimentConfig {
    ModelKind model = ModelKind::both;
    double gamma = 1.0;
    Bandwidth lambda = Bandwidth::finite(3.0);
    double sigma = 40.0;
    /// Pulse interval; unset means the Schulman pairing tau = 4 / sigma.
    std::optional<double> tau;
    TimeGrid time;
    Tolerances tol;
    int precision = 12;

    /// fig1 bandwidths.
    std::vector<Bandwidth> lambdas;
    /// fig2 pulse intervals and bandwidth axis.
    std::vector<double> taus;
    double lambda_min = 0.1;
    double lambda_max = 50.0;
    /// fig3 panels.
    std::vector<double> sigmas;

    /// sweep axis ("lambda", "sigma" or "tau") and inclusive range.
    std::string axis = "sigma";
    double from = 0.0;
    double to = 0.0;
    double step = 0.0;
    std::vector<std::string> observables;
    std::vector<double> times;

    /// Throws ConfigError on any out-of-range value.
    void validate() const;
    /// Pulse interval actually used for a given efficiency.
    double pulse_interval(double sigma_value) const;
    /// Every setting as `key=value` pairs in a fixed order.
    std::string canonical() const;
};

/// Built-in defaults of a subcommand.
ExperimentConfig preset(std::string_view subcommand);

/// Sets one `key = value` setting; keys are those printed by canonical().
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Reads `key = value` lines; `#` starts a comment.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

struct Column {
    std::string name;
    /// Values are probabilities and are range-checked before output.
    bool probability = false;
    std::vector<double> values;
};

struct Dataset {
    std::string subcommand;
    std::vector<Column> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
};

Dataset run_fig1(const ExperimentConfig& cfg);
Dataset run_fig2(const ExperimentConfig& cfg);
Dataset run_fig3(const ExperimentConfig& cfg);
Dataset run_sweep(const ExperimentConfig& cfg);
Dataset run_pulsed(const ExperimentConfig& cfg);
Dataset run_continuous(const ExperimentConfig& cfg);
Dataset run_compare(const ExperimentConfig& cfg);

Dataset run(std::string_view subcommand, const ExperimentConfig& cfg);

/// Probabilities further than this outside [0, 1] are an error; closer ones are clamped.
inline constexpr double kProbabilitySlack = 1e-9;

/// Header comment, column line, rows, and a trailing comment listing clamped cells.
/// Throws InvariantError if a probability lies outside the slack.
std::string format_csv(const Dataset& data, const ExperimentConfig& cfg);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct Check {
    std::string name;
    double measured = 0.0;
    double allowed = 0.0;
    bool passed = false;
    std::string detail;
};

struct SelfcheckOptions {
    /// Divides the check tolerances and the numerical tolerances.
    double tighten = 1.0;
    /// Evaluates the self-energy with the wrong logarithm branch.
    bool misbranch = false;
};

std::vector<Check> run_selfcheck(const SelfcheckOptions& options = {});

std::string format_check(const Check& check);

}  // namespace zeno::experiments
