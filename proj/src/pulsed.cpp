#include "zeno/pulsed.hpp"

#include <cmath>
#include <stdexcept>

#include "zeno/quadrature.hpp"

namespace zeno::pulsed {

double w_lambda(double t, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("w_lambda: time must be >= 0");
    const double g = sys.gamma();
    if (det.lambda.is_infinite()) return -std::expm1(-g * t);
    if (t == 0.0) return 0.0;

    // |b(k,t)|^2 written without the cancellation of |exp(-ikt) - exp(-gt/2)|^2 at small t.
    const double decay = std::exp(-0.5 * g * t);
    const double one_minus = -std::expm1(-0.5 * g * t);
    const double pref = g / (2.0 * kPi);
    auto integrand = [&](double k) {
        const double s = std::sin(0.5 * k * t);
        return pref * (one_minus * one_minus + 4.0 * decay * s * s) / (k * k + 0.25 * g * g);
    };
    // Even in k.
    const auto r = integrate_adaptive(integrand, 0.0, det.lambda.value(), tol);
    return 2.0 * require_converged(r, "w_lambda");
}

double w_lambda_inf(const SystemParams& sys, const DetectorParams& det) {
    if (det.lambda.is_infinite()) return 1.0;
    return (2.0 / kPi) * std::atan(2.0 * det.lambda.value() / sys.gamma());
}

ProbabilityCurve noclick_bb(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                            const Tolerances& tol) {
    check_time_grid(times);
    const double tau = det.pulse_interval();
    const double g = sys.gamma();
    ProbabilityCurve curve{times, {}};
    curve.values.reserve(times.size());
    if (det.lambda.is_infinite()) {
        for (double t : times) curve.values.push_back(std::exp(-g * t));
        return curve;
    }
    const double ratio = w_lambda(tau, sys, det, tol) / -std::expm1(-g * tau);
    for (double t : times) curve.values.push_back(1.0 + ratio * std::expm1(-g * t));
    return curve;
}

double noclick_bb_inf(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol) {
    const double tau = det.pulse_interval();
    if (det.lambda.is_infinite()) return 0.0;
    return 1.0 - w_lambda(tau, sys, det, tol) / -std::expm1(-sys.gamma() * tau);
}

}  // namespace zeno::pulsed
