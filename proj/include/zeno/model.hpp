#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace zeno {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// The unstable state. Energies are measured from M0 = 0 and the continuum
/// dispersion is omega(k) = k, so the decay width is the only parameter.
class SystemParams {
public:
    explicit SystemParams(double gamma = 1.0);

    double gamma() const { return gamma_; }
    /// Coupling constant g with g^2 = gamma.
    double coupling() const;

private:
    double gamma_;
};

/// Detector half-bandwidth. Infinity is an explicit state, never a sentinel.
class Bandwidth {
public:
    static Bandwidth finite(double lambda);
    static Bandwidth infinite() { return Bandwidth(); }

    bool is_infinite() const { return infinite_; }
    /// Finite value; throws std::logic_error for the infinite bandwidth.
    double value() const;
    /// Finite value or +inf, for formulas that degrade gracefully.
    double as_double() const;

private:
    Bandwidth() = default;
    bool infinite_ = true;
    double value_ = 0.0;
};

struct DetectorParams {
    Bandwidth lambda = Bandwidth::finite(3.0);
    double sigma = 0.0;
    std::optional<double> tau;

    DetectorParams() = default;
    DetectorParams(Bandwidth lambda_, double sigma_, std::optional<double> tau_ = std::nullopt);

    /// Throws std::invalid_argument if any field is out of range.
    void validate() const;
    /// Pulse interval; throws std::invalid_argument when absent.
    double pulse_interval() const;
};

/// Numerical targets shared by every integration in the project.
struct Tolerances {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// Removable-singularity and band-edge window, in units of max(gamma, lambda).
    double sing_window = 1e-6;
    /// Half-width of the sampled energy grid; 0 selects max(40 gamma, 4 lambda, 4 sigma).
    double e_max = 0.0;
    std::size_t grid_points = std::size_t{1} << 16;
    std::size_t max_subdivisions = 4000;
    /// Largest admissible phase advance t * dE between neighbouring grid nodes.
    double max_phase_step = 0.1;
    /// Absolute target for momentum integrals of |b^C|^2; each evaluation
    /// is a full pass over the spectral table.
    double kspace_abs_tol = 1e-9;

    void validate() const;
    /// Same targets with rel_tol, abs_tol and kspace_abs_tol divided by `factor`.
    Tolerances tightened(double factor) const;
};

struct ProbabilityCurve {
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }
    /// Checks ordering of times and that every value lies in [-tol, 1 + tol].
    void validate(double tol) const;
};

/// Throws std::invalid_argument unless times are finite, nonnegative and strictly increasing.
void check_time_grid(const std::vector<double>& times);

/// a(t) = exp(-gamma t / 2).
cdouble survival_amplitude_free(double t, const SystemParams& sys);

/// b(k, t) = sqrt(gamma / 2 pi) (exp(-i k t) - exp(-gamma t / 2)) / (k + i gamma / 2).
cdouble decay_amplitude_free(double k, double t, const SystemParams& sys);

/// p(t) = exp(-gamma t).
double survival_prob_free(double t, const SystemParams& sys);

}  // namespace zeno
