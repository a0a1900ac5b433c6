#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "zeno/pulsed.hpp"

using namespace zeno;

namespace {

DetectorParams band(double lambda, std::optional<double> tau = std::nullopt) {
    return DetectorParams(Bandwidth::finite(lambda), 0.0, tau);
}

}  // namespace

TEST_CASE("single-click probability against high-precision references") {
    const SystemParams sys(1.0);
    // 30-digit quadrature of |b(k, t)|^2 over the band.
    CHECK(pulsed::w_lambda(0.1, sys, band(3.0)) == doctest::Approx(0.00906279447271999309).epsilon(1e-11));
    CHECK(pulsed::w_lambda(0.5, sys, band(3.0)) == doctest::Approx(0.175759590917626760).epsilon(1e-11));
    CHECK(pulsed::w_lambda(1.0, sys, band(3.0)) == doctest::Approx(0.468751837124197932).epsilon(1e-11));
    CHECK(pulsed::w_lambda(2.0, sys, band(3.0)) == doctest::Approx(0.751611485509529468).epsilon(1e-11));
    CHECK(pulsed::w_lambda(1.0, sys, band(1.0)) == doctest::Approx(0.191819133606522053).epsilon(1e-11));
    CHECK(pulsed::w_lambda(0.5, sys, band(10.0)) == doctest::Approx(0.351247835035603409).epsilon(1e-11));
}

TEST_CASE("single-click probability edge cases") {
    const SystemParams sys(1.0);
    const DetectorParams inf(Bandwidth::infinite(), 0.0);
    CHECK(pulsed::w_lambda(0.0, sys, band(3.0)) == 0.0);
    CHECK(pulsed::w_lambda(0.7, sys, inf) == doctest::Approx(1.0 - std::exp(-0.7)).epsilon(1e-15));
    CHECK_THROWS_AS(pulsed::w_lambda(-1.0, sys, band(3.0)), std::invalid_argument);
    CHECK(pulsed::w_lambda_inf(sys, inf) == 1.0);
    for (double lam : {0.5, 1.0, 3.0, 10.0}) {
        CHECK(pulsed::w_lambda(80.0, sys, band(lam)) ==
              doctest::Approx(2.0 / kPi * std::atan(2.0 * lam)).epsilon(1e-9));
    }
}

TEST_CASE("quadratic onset and the non-commuting limits") {
    const SystemParams sys(1.0);
    for (double lam : {1.0, 3.0, 30.0}) {
        const double t = 1e-3 / lam;
        const double ratio = pulsed::w_lambda(t, sys, band(lam)) / (sys.gamma() * lam * t * t / kPi);
        CHECK(ratio == doctest::Approx(1.0).epsilon(1e-2));
    }
    // Finite band: w / t -> 0 as t -> 0. Infinite band: w / t -> gamma.
    const double t = 1e-6;
    CHECK(pulsed::w_lambda(t, sys, band(1e3)) / t < 1e-2);
    CHECK(pulsed::w_lambda(t, sys, DetectorParams(Bandwidth::infinite(), 0.0)) / t ==
          doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("w_lambda grows towards its limit and overshoots it slightly") {
    const SystemParams sys(1.0);
    const auto det = band(3.0);
    const double limit = pulsed::w_lambda_inf(sys, det);
    double prev = 0.0;
    for (double t = 0.05; t < 10.0; t *= 1.3) {
        const double w = pulsed::w_lambda(t, sys, det);
        CHECK(w > prev);
        CHECK(w < limit);
        prev = w;
    }
    // mpmath: w(t) - (2/pi) atan 6 for lambda = 3.
    CHECK(pulsed::w_lambda(12.353226453672526, sys, det) - limit ==
          doctest::Approx(2.5930869282275696e-06).epsilon(1e-4));
    CHECK(pulsed::w_lambda(16.059194389774284, sys, det) - limit ==
          doctest::Approx(1.0653784673958227e-06).epsilon(1e-4));
}

TEST_CASE("no-click curve matches the collapse recursion") {
    // After each empty measurement the surviving amplitude keeps decaying as
    // exp(-gamma t / 2), and the next interval contributes exp(-gamma t_n) w(tau).
    const SystemParams sys(1.0);
    const double tau = 0.5;
    const double w_tau = 0.175759590917626760;
    const auto det = band(3.0, tau);
    std::vector<double> times;
    for (int n = 0; n <= 12; ++n) times.push_back(n * tau);
    const auto curve = pulsed::noclick_bb(times, sys, det);
    double expected = 1.0;
    for (int n = 0; n <= 12; ++n) {
        CHECK(curve.values[n] == doctest::Approx(expected).epsilon(1e-10));
        expected -= std::exp(-sys.gamma() * n * tau) * w_tau;
    }
}

TEST_CASE("no-click curve is exponential-affine") {
    const SystemParams sys(2.0);
    const auto det = band(4.0, 0.3);
    const std::vector<double> times = {0.1, 0.4, 1.0, 2.5, 4.0};
    const auto curve = pulsed::noclick_bb(times, sys, det);
    const double p_inf = pulsed::noclick_bb_inf(sys, det);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double scaled = (curve.values[i] - p_inf) / (1.0 - p_inf);
        CHECK(std::log(scaled) / times[i] == doctest::Approx(-sys.gamma()).epsilon(1e-10));
    }
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(curve.values[i] < curve.values[i - 1]);
}

TEST_CASE("frequent pulses freeze the decay") {
    const SystemParams sys(1.0);
    double prev = 0.0;
    for (double tau : {1.0, 0.1, 0.01, 0.001}) {
        const double p = pulsed::noclick_bb_inf(sys, band(3.0, tau));
        CHECK(p > prev);
        prev = p;
    }
    CHECK(prev > 0.999);
    const double expansion = 1.0 - 3.0 * 1e-3 / kPi;
    CHECK(std::abs(1.0 - prev) == doctest::Approx(1.0 - expansion).epsilon(1e-2));
}

TEST_CASE("infinite band reproduces the exponential law") {
    const SystemParams sys(1.0);
    const DetectorParams det(Bandwidth::infinite(), 0.0, 0.2);
    const std::vector<double> times = {0.0, 0.3, 3.0};
    const auto curve = pulsed::noclick_bb(times, sys, det);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(curve.values[i] == doctest::Approx(std::exp(-times[i])));
    CHECK(pulsed::noclick_bb_inf(sys, det) == 0.0);
}

TEST_CASE("pulsed model requires a pulse interval and a valid grid") {
    const SystemParams sys(1.0);
    CHECK_THROWS_AS(pulsed::noclick_bb({0.0, 1.0}, sys, band(3.0)), std::invalid_argument);
    CHECK_THROWS_AS(pulsed::noclick_bb_inf(sys, band(3.0)), std::invalid_argument);
    CHECK_THROWS_AS(pulsed::noclick_bb({1.0, 0.5}, sys, band(3.0, 0.1)), std::invalid_argument);
}
