#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "zeno/model.hpp"

using namespace zeno;

TEST_CASE("free amplitudes at reference points") {
    const SystemParams sys(1.0);
    CHECK(survival_amplitude_free(0.0, sys).real() == doctest::Approx(1.0));
    CHECK(survival_prob_free(2.0, sys) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));

    // 30-digit reference values.
    const cdouble b = decay_amplitude_free(1.0, 1.0, sys);
    CHECK(b.real() == doctest::Approx(-0.155416373836324866).epsilon(1e-14));
    CHECK(b.imag() == doctest::Approx(-0.257990166652739112).epsilon(1e-14));
    const cdouble b2 = decay_amplitude_free(-2.0, 0.5, sys);
    CHECK(b2.real() == doctest::Approx(0.0842690422402188665).epsilon(1e-14));
    CHECK(b2.imag() == doctest::Approx(-0.146781916225396056).epsilon(1e-14));

    CHECK(std::abs(decay_amplitude_free(3.0, 0.0, sys)) == 0.0);
}

TEST_CASE("free evolution conserves probability") {
    const SystemParams sys(2.0);
    const double g2 = 0.25 * sys.gamma() * sys.gamma();
    // |a|^2 + \int |b|^2 dk: Simpson on [-K, K], and the non-oscillating part of
    // |b|^2 = (gamma / 2pi)(1 + a^2 - 2a cos kt) / (k^2 + gamma^2 / 4) beyond K.
    for (double t : {0.1, 1.0, 3.0}) {
        const double big_k = 2e4;
        const int n = 4000000;
        const double h = 2.0 * big_k / n;
        double sum = std::norm(decay_amplitude_free(-big_k, t, sys)) + std::norm(decay_amplitude_free(big_k, t, sys));
        for (int i = 1; i < n; ++i) {
            sum += (i % 2 ? 4.0 : 2.0) * std::norm(decay_amplitude_free(-big_k + i * h, t, sys));
        }
        const double a2 = survival_prob_free(t, sys);
        const double tail = sys.gamma() / (2.0 * kPi) * (1.0 + a2) * 2.0 * (0.5 * kPi - std::atan(big_k / std::sqrt(g2))) / std::sqrt(g2);
        CHECK(a2 + sum * h / 3.0 + tail == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(SystemParams{0.0}, std::invalid_argument);
    CHECK_THROWS_AS(SystemParams{-1.0}, std::invalid_argument);
    CHECK_THROWS_AS(SystemParams{INFINITY}, std::invalid_argument);
    CHECK(SystemParams(4.0).coupling() == doctest::Approx(2.0));

    CHECK_THROWS_AS(Bandwidth::finite(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Bandwidth::finite(INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(Bandwidth::infinite().value(), std::logic_error);
    CHECK(std::isinf(Bandwidth::infinite().as_double()));
    CHECK(Bandwidth::finite(2.5).value() == 2.5);

    CHECK_THROWS_AS(DetectorParams(Bandwidth::finite(1.0), -1.0), std::invalid_argument);
    CHECK_THROWS_AS(DetectorParams(Bandwidth::finite(1.0), 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DetectorParams(Bandwidth::finite(1.0), 1.0).pulse_interval(), std::invalid_argument);
    CHECK(DetectorParams(Bandwidth::finite(1.0), 1.0, 0.25).pulse_interval() == 0.25);

    const SystemParams sys;
    CHECK_THROWS_AS(survival_amplitude_free(-1.0, sys), std::invalid_argument);
    CHECK_THROWS_AS(decay_amplitude_free(NAN, 1.0, sys), std::invalid_argument);
}

TEST_CASE("tolerances") {
    Tolerances tol;
    CHECK_NOTHROW(tol.validate());
    const Tolerances tight = tol.tightened(100.0);
    CHECK(tight.rel_tol == doctest::Approx(tol.rel_tol / 100.0));
    CHECK(tight.abs_tol == doctest::Approx(tol.abs_tol / 100.0));
    CHECK(tight.grid_points == tol.grid_points);
    CHECK_THROWS_AS(tol.tightened(0.0), std::invalid_argument);
    tol.rel_tol = 0.0;
    CHECK_THROWS_AS(tol.validate(), std::invalid_argument);
    tol = Tolerances{};
    tol.grid_points = 1;
    CHECK_THROWS_AS(tol.validate(), std::invalid_argument);
}

TEST_CASE("probability curves") {
    ProbabilityCurve c{{0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}};
    CHECK_NOTHROW(c.validate(0.0));
    c.values[1] = 1.0 + 1e-6;
    CHECK_THROWS_AS(c.validate(1e-9), std::invalid_argument);
    CHECK_NOTHROW(c.validate(1e-5));
    CHECK_THROWS_AS(check_time_grid({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(check_time_grid({1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(check_time_grid({-1.0}), std::invalid_argument);
    CHECK_THROWS_AS((ProbabilityCurve{{0.0}, {}}.validate(0.0)), std::invalid_argument);
}

TEST_CASE("decay amplitude modulus is even in k") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> kd(-20.0, 20.0), td(0.0, 10.0);
    const SystemParams sys(1.3);
    for (int i = 0; i < 200; ++i) {
        const double k = kd(rng), t = td(rng);
        CHECK(std::abs(decay_amplitude_free(k, t, sys)) ==
              doctest::Approx(std::abs(decay_amplitude_free(-k, t, sys))).epsilon(1e-12));
    }
}
