#pragma once

#include <memory>
#include <vector>

#include "zeno/model.hpp"
#include "zeno/quadrature.hpp"

namespace zeno::continuous {

/// Which side of the real axis the first (real-argument) logarithm of the
/// self-energy is approached from. `misbranched` exists only so that the
/// self-check can demonstrate that the density test catches a branch bug.
enum class Branch { retarded, misbranched };

/// Retarded shift E -> E + i eps actually applied to the self-energy, in units of gamma.
inline constexpr double kRetardedShift = 1e-8;

/// Self-energy of the unstable state for the box-shaped efficiency profile
/// sigma(k) = sigma on (-lambda, lambda), 0 outside:
///
///   Sigma(E) = (gamma / 2 pi) [log((lambda + E) / (lambda - E))
///                              + log((E - lambda + i sigma/2) / (E + lambda + i sigma/2))]
///
/// evaluated at E + i eps with principal-branch logarithms.
class SelfEnergyFn {
public:
    SelfEnergyFn(SystemParams sys, DetectorParams det, Tolerances tol = {}, Branch branch = Branch::retarded);

    /// Throws SingularPointError within the singular window of +-lambda.
    cdouble operator()(double e) const;
    /// As operator(), but inputs inside the window are moved just outside it
    /// (to edge +- 2 window) on their own side.
    cdouble one_sided(double e) const;

    const SystemParams& system() const { return sys_; }
    const DetectorParams& detector() const { return det_; }
    Branch branch() const { return branch_; }
    /// Half-width of the band-edge window.
    double window() const { return window_; }

private:
    SystemParams sys_;
    DetectorParams det_;
    Branch branch_;
    double window_;
};

cdouble self_energy(double e, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {},
                    Branch branch = Branch::retarded);

/// d_S(E) = -(1/pi) Im [E + Sigma(E)]^{-1}. Band-edge inputs are evaluated
/// one-sidedly. Throws InvariantError if the result is below -tol.abs_tol.
double spectral_density(double e, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {},
                        Branch branch = Branch::retarded);

/// d_S sampled on the default (or configured) grid with band-edge patches.
SpectralTable build_spectral_table(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {},
                                   Branch branch = Branch::retarded);

/// Grid half-width used when tol.e_max is 0: max(40 gamma, 4 lambda, 4 sigma).
double default_e_max(const SystemParams& sys, const DetectorParams& det);

/// Continuous-measurement dynamics for one parameter set. Holds the spectral
/// table, which is immutable after construction; all methods are const and
/// safe to call concurrently.
class Model {
public:
    Model(SystemParams sys, DetectorParams det, Tolerances tol = {});
    /// Uses a caller-built table, e.g. one shared across several models.
    Model(SystemParams sys, DetectorParams det, SpectralTable table, Tolerances tol = {});

    const SpectralTable& table() const { return *table_; }
    const SystemParams& system() const { return sys_; }
    const DetectorParams& detector() const { return det_; }
    const Tolerances& tolerances() const { return tol_; }

    cdouble survival_amplitude(double t) const;
    double survival_prob(double t) const;
    /// b^C(k, t) from the table.
    cdouble decay_amplitude(double k, double t) const;
    /// Weight of |b^C(k, t)|^2 over all k: decayed but not registered.
    double w(double t) const;
    /// sigma * \int_{-lambda}^{lambda} |b^C(k, t)|^2 dk, the instantaneous click rate.
    double click_rate(double t) const;
    double noclick(double t) const;

private:
    class Kernel;
    double inband_weight(const Kernel& kernel) const;
    double outer_weight(const Kernel& kernel, cdouble a) const;
    void sort_nodes();
    void verify_symmetry() const;

    SystemParams sys_;
    DetectorParams det_;
    Tolerances tol_;
    std::shared_ptr<const SpectralTable> table_;
    double window_ = 0.0;
    // Table quadrature rule in increasing energy order.
    std::vector<double> nodes_;
    std::vector<double> wres_;
};

ProbabilityCurve survival_prob_c(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                                 const Tolerances& tol = {});

cdouble decay_amplitude_c(double k, double t, const SystemParams& sys, const DetectorParams& det,
                          const SpectralTable& table, const Tolerances& tol = {});

double w_c(double t, const SystemParams& sys, const DetectorParams& det, const SpectralTable& table,
           const Tolerances& tol = {});

ProbabilityCurve noclick_c(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                           const Tolerances& tol = {});
ProbabilityCurve noclick_c(const std::vector<double>& times, const Model& model);

/// Probability of never clicking: (gamma / pi) \int_lambda^inf dk |k + Sigma(k)|^{-2}.
double noclick_c_inf(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol = {});
/// Large-sigma form of the same asymptote, 1 - w_lambda(inf).
double noclick_c_inf_large_sigma(const SystemParams& sys, const DetectorParams& det);

/// exp(-gamma t) + gamma / (gamma - sigma) (exp(-sigma t) - exp(-gamma t)); exact for lambda = inf.
ProbabilityCurve noclick_c_large_lambda(const std::vector<double>& times, const SystemParams& sys,
                                        const DetectorParams& det);
double noclick_c_large_lambda(double t, const SystemParams& sys, const DetectorParams& det);

/// Measurement-renormalized width (gamma / pi) arg((-lambda + i sigma/2) / (lambda + i sigma/2)).
double effective_width(const SystemParams& sys, const DetectorParams& det);

/// (1 - p_inf) exp(-effective_width t) + p_inf with p_inf = noclick_c_inf.
ProbabilityCurve noclick_c_approx(const std::vector<double>& times, const SystemParams& sys,
                                  const DetectorParams& det, const Tolerances& tol = {});

}  // namespace zeno::continuous
