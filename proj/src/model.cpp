#include "zeno/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace zeno {

namespace {

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("time must be finite and nonnegative, got " + std::to_string(t));
    }
}

}  // namespace

SystemParams::SystemParams(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("decay width gamma must be positive and finite");
    }
}

double SystemParams::coupling() const { return std::sqrt(gamma_); }

Bandwidth Bandwidth::finite(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("bandwidth lambda must be positive and finite (use Bandwidth::infinite())");
    }
    Bandwidth b;
    b.infinite_ = false;
    b.value_ = lambda;
    return b;
}

double Bandwidth::value() const {
    if (infinite_) throw std::logic_error("infinite bandwidth has no finite value");
    return value_;
}

double Bandwidth::as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
}

DetectorParams::DetectorParams(Bandwidth lambda_, double sigma_, std::optional<double> tau_)
    : lambda(lambda_), sigma(sigma_), tau(tau_) {
    validate();
}

void DetectorParams::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("efficiency sigma must be finite and >= 0");
    }
    if (tau && (!(*tau > 0.0) || !std::isfinite(*tau))) {
        throw std::invalid_argument("pulse interval tau must be positive and finite");
    }
}

double DetectorParams::pulse_interval() const {
    if (!tau) throw std::invalid_argument("pulsed model requires a pulse interval tau");
    return *tau;
}

void Tolerances::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(rel_tol) || !positive(abs_tol) || !positive(sing_window) || !positive(max_phase_step) ||
        !positive(kspace_abs_tol)) {
        throw std::invalid_argument("tolerances must be strictly positive");
    }
    if (!(e_max >= 0.0) || !std::isfinite(e_max)) throw std::invalid_argument("e_max must be >= 0 (0 = auto)");
    if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
}

Tolerances Tolerances::tightened(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("tightening factor must be positive");
    Tolerances t = *this;
    t.rel_tol /= factor;
    t.abs_tol /= factor;
    t.kspace_abs_tol /= factor;
    return t;
}

void check_time_grid(const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0) {
            throw std::invalid_argument("times must be finite and nonnegative");
        }
        if (i > 0 && !(times[i] > times[i - 1])) {
            throw std::invalid_argument("times must be strictly increasing");
        }
    }
}

void ProbabilityCurve::validate(double tol) const {
    if (times.size() != values.size()) throw std::invalid_argument("curve size mismatch");
    check_time_grid(times);
    for (double v : values) {
        if (!(v >= -tol && v <= 1.0 + tol)) {
            throw std::invalid_argument("probability " + std::to_string(v) + " outside [0, 1]");
        }
    }
}

cdouble survival_amplitude_free(double t, const SystemParams& sys) {
    require_time(t);
    return {std::exp(-0.5 * sys.gamma() * t), 0.0};
}

cdouble decay_amplitude_free(double k, double t, const SystemParams& sys) {
    require_time(t);
    if (!std::isfinite(k)) throw std::invalid_argument("momentum k must be finite");
    const double g = sys.gamma();
    const cdouble num = std::polar(1.0, -k * t) - std::exp(-0.5 * g * t);
    return std::sqrt(g / (2.0 * kPi)) * num / cdouble(k, 0.5 * g);
}

double survival_prob_free(double t, const SystemParams& sys) {
    require_time(t);
    return std::exp(-sys.gamma() * t);
}

}  // namespace zeno
