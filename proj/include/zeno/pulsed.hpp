#pragma once

#include <vector>

#include "zeno/model.hpp"

namespace zeno::pulsed {

/// Click probability of a single ideal measurement at time t: the weight of
/// |b(k, t)|^2 inside the detector band (-lambda, lambda).
double w_lambda(double t, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {});

/// t -> infinity limit of w_lambda: (2 / pi) arctan(2 lambda / gamma).
double w_lambda_inf(const SystemParams& sys, const DetectorParams& det);

/// No-click probability under ideal measurements every tau. Exact at t = n tau;
/// the same closed form is used between pulses.
ProbabilityCurve noclick_bb(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                            const Tolerances& tol = {});

/// Probability that the pulsed detector never clicks.
double noclick_bb_inf(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {});

}  // namespace zeno::pulsed
