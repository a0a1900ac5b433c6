#include "zeno/continuous.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <gsl/gsl_sf_expint.h>

#include "zeno/pulsed.hpp"

namespace zeno::continuous {

namespace {

double band_window(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol) {
    const double scale = det.lambda.is_infinite() ? sys.gamma() : std::max(sys.gamma(), det.lambda.value());
    return tol.sing_window * scale;
}

// gamma (exp(-sigma t) - exp(-gamma t)) / (gamma - sigma), finite at sigma = gamma.
double exp_difference_ratio(double gamma, double sigma, double t) {
    const double x = sigma - gamma;
    const double frac = (x == 0.0) ? t : -std::expm1(-x * t) / x;
    return gamma * std::exp(-gamma * t) * frac;
}

}  // namespace

// ---------------------------------------------------------------------------
// Self-energy and density

SelfEnergyFn::SelfEnergyFn(SystemParams sys, DetectorParams det, Tolerances tol, Branch branch)
    : sys_(sys), det_(det), branch_(branch), window_(band_window(sys, det, tol)) {
    det_.validate();
}

cdouble SelfEnergyFn::operator()(double e) const {
    const double g = sys_.gamma();
    if (det_.lambda.is_infinite()) return {0.0, 0.5 * g};
    const double lam = det_.lambda.value();
    if (std::abs(e - lam) < window_ || std::abs(e + lam) < window_) {
        throw SingularPointError("self_energy: E = " + std::to_string(e) + " lies on a band edge");
    }
    const double eps = kRetardedShift * g;
    const cdouble z(e, eps);
    const cdouble z_first = (branch_ == Branch::retarded) ? z : std::conj(z);
    const cdouble half_sigma(0.0, 0.5 * det_.sigma);
    const cdouble first = std::log((lam + z_first) / (lam - z_first));
    const cdouble second = std::log((z - lam + half_sigma) / (z + lam + half_sigma));
    return g / (2.0 * kPi) * (first + second);
}

cdouble SelfEnergyFn::one_sided(double e) const {
    if (!det_.lambda.is_infinite()) {
        const double lam = det_.lambda.value();
        for (double edge : {-lam, lam}) {
            const double d = e - edge;
            if (std::abs(d) < window_) {
                // Exactly on the edge counts as outside the band.
                const bool outside = (edge > 0.0) ? d >= 0.0 : d <= 0.0;
                const double dir = (edge > 0.0) == outside ? 1.0 : -1.0;
                return (*this)(edge + dir * 2.0 * window_);
            }
        }
    }
    return (*this)(e);
}

cdouble self_energy(double e, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol,
                    Branch branch) {
    return SelfEnergyFn(sys, det, tol, branch)(e);
}

namespace {

double density_from(const SelfEnergyFn& sigma_fn, double e, double abs_tol) {
    const cdouble s = sigma_fn.one_sided(e);
    double im = s.imag();
    // Im Sigma provides the damping wherever it is nonzero.
    if (im == 0.0) im = kRetardedShift * sigma_fn.system().gamma();
    const double re = e + s.real();
    const double d = im / (kPi * (re * re + im * im));
    if (d < -abs_tol) {
        throw InvariantError("spectral density " + std::to_string(d) + " < 0 at E = " + std::to_string(e) +
                             " (wrong logarithm branch?)");
    }
    return d;
}

}  // namespace

double spectral_density(double e, const SystemParams& sys, const DetectorParams& det, const Tolerances& tol,
                        Branch branch) {
    return density_from(SelfEnergyFn(sys, det, tol, branch), e, tol.abs_tol);
}

double default_e_max(const SystemParams& sys, const DetectorParams& det) {
    const double g = sys.gamma();
    double e = std::max(40.0 * g, 4.0 * det.sigma);
    if (!det.lambda.is_infinite()) e = std::max(e, 4.0 * det.lambda.value());
    return e;
}

SpectralTable build_spectral_table(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol,
                                   Branch branch) {
    tol.validate();
    SpectralTable::Layout layout;
    layout.e_max = tol.e_max > 0.0 ? tol.e_max : default_e_max(sys, det);
    layout.points = tol.grid_points;
    layout.reference_width = sys.gamma();
    if (!det.lambda.is_infinite() && det.sigma > 0.0) {
        layout.singular_points = {-det.lambda.value(), det.lambda.value()};
    }
    const SelfEnergyFn sigma_fn(sys, det, tol, branch);
    const double abs_tol = tol.abs_tol;
    return SpectralTable::sample([&](double e) { return density_from(sigma_fn, e, abs_tol); }, layout);
}

// ---------------------------------------------------------------------------
// Amplitudes at a fixed time

/// Per-time workspace: the table nodes premultiplied by exp(-i E t), so that
/// b^C(k, t) for many k costs one pass of divisions each.
class Model::Kernel {
public:
    Kernel(const Model& m, double t) : model_(m), t_(t) {
        const auto& table = m.table();
        nodes_ = m.nodes_;
        wres_ = m.wres_;
        phased_re_.resize(nodes_.size());
        phased_im_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            phased_re_[i] = wres_[i] * std::cos(nodes_[i] * t);
            phased_im_[i] = -wres_[i] * std::sin(nodes_[i] * t);
        }
        pref_ = std::sqrt(m.sys_.gamma() / (2.0 * kPi));
        for (const auto& l : table.reference_terms()) {
            ref_.push_back({l.coefficient * 2.0 * kPi / l.width, cdouble(0.0, -0.5 * l.width)});
        }
    }

    double time() const { return t_; }
    double prefactor() const { return pref_; }

    /// d a^C / dt at this time.
    cdouble survival_derivative() const {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            re += nodes_[i] * phased_im_[i];
            im -= nodes_[i] * phased_re_[i];
        }
        for (const auto& [mass, pole] : ref_) re += mass * pole.imag() * std::exp(pole.imag() * t_);
        return {re, im};
    }

    /// d a^C / dt at t = 0+.
    double initial_derivative() const {
        double d = 0.0;
        for (const auto& [mass, pole] : ref_) d += mass * pole.imag();
        return d;
    }

    cdouble amplitude(double k) const {
        if (t_ == 0.0) return {0.0, 0.0};
        const auto& det = model_.det_;
        const bool in_band = det.lambda.is_infinite() || std::abs(k) < det.lambda.value();
        const cdouble w(k, in_band ? -0.5 * det.sigma : 0.0);
        const double damp = std::exp(w.imag() * t_);
        const double ew_re = damp * std::cos(k * t_);
        const double ew_im = -damp * std::sin(k * t_);
        const double win = model_.window_;
        const double win2 = win * win;
        const double di = w.imag();
        double re = 0.0, im = 0.0;
        auto plain = [&](std::size_t first, std::size_t last) {
            for (std::size_t i = first; i < last; ++i) {
                const double dr = k - nodes_[i];
                const double inv = 1.0 / (dr * dr + di * di);
                const double nr = wres_[i] * ew_re - phased_re_[i];
                const double ni = wres_[i] * ew_im - phased_im_[i];
                re += (nr * dr + ni * di) * inv;
                im += (ni * dr - nr * di) * inv;
            }
        };
        // Nodes are sorted, so those inside the removable-singularity window are contiguous.
        std::size_t lo = nodes_.size(), hi = nodes_.size();
        if (std::abs(di) < win) {
            lo = static_cast<std::size_t>(std::lower_bound(nodes_.begin(), nodes_.end(), k - win) - nodes_.begin());
            hi = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), k + win) - nodes_.begin());
        }
        plain(0, lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const double dr = k - nodes_[i];
            if (dr * dr + di * di < win2) {
                const cdouble taylor = cdouble(ew_re, ew_im) * (cdouble(0.0, -t_) + 0.5 * t_ * t_ * cdouble(dr, di));
                re += wres_[i] * taylor.real();
                im += wres_[i] * taylor.imag();
            } else {
                plain(i, i + 1);
            }
        }
        plain(hi, nodes_.size());
        cdouble ref = 0.0;
        for (const auto& [mass, pole] : ref_) ref += mass * exp_divided_difference(w, pole, t_, win);
        return pref_ * (cdouble(re, im) + ref);
    }

private:
    const Model& model_;
    double t_;
    double pref_ = 0.0;
    std::vector<std::pair<double, cdouble>> ref_;
    std::vector<double> nodes_, wres_, phased_re_, phased_im_;
};

Model::Model(SystemParams sys, DetectorParams det, Tolerances tol)
    : sys_(sys), det_(det), tol_(tol), window_(band_window(sys, det, tol)) {
    det_.validate();
    tol_.validate();
    table_ = std::make_shared<const SpectralTable>(build_spectral_table(sys_, det_, tol_));
    sort_nodes();
    if (!det_.lambda.is_infinite()) verify_symmetry();
}

Model::Model(SystemParams sys, DetectorParams det, SpectralTable table, Tolerances tol)
    : sys_(sys), det_(det), tol_(tol), window_(band_window(sys, det, tol)) {
    det_.validate();
    tol_.validate();
    table_ = std::make_shared<const SpectralTable>(std::move(table));
    sort_nodes();
    if (!det_.lambda.is_infinite()) verify_symmetry();
}

void Model::sort_nodes() {
    const auto nodes = table_->rule_nodes();
    const auto wres = table_->rule_weighted_residual();
    std::vector<std::size_t> order(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes[a] < nodes[b]; });
    nodes_.reserve(order.size());
    wres_.reserve(order.size());
    for (std::size_t i : order) {
        nodes_.push_back(nodes[i]);
        wres_.push_back(wres[i]);
    }
}

void Model::verify_symmetry() const {
    // |b^C(-k, t)| = |b^C(k, t)| because sigma(k) is even; checked once before
    // the momentum integrals fold onto k >= 0.
    std::mt19937 rng(0x5eed);
    const double lam = det_.lambda.value();
    const double t_hi = std::min(5.0 / sys_.gamma(), max_resolvable_time(*table_, tol_));
    std::uniform_real_distribution<double> kd(0.0, 2.0 * lam), td(0.05 * t_hi, t_hi);
    for (int i = 0; i < 3; ++i) {
        const double k = kd(rng);
        const double t = td(rng);
        const Kernel kernel(*this, t);
        const double plus = std::norm(kernel.amplitude(k));
        const double minus = std::norm(kernel.amplitude(-k));
        if (std::abs(plus - minus) > 1e-8 * std::max(plus, 1e-12)) {
            throw InvariantError("decay amplitude is not symmetric in k at k = " + std::to_string(k) +
                                 ", t = " + std::to_string(t));
        }
    }
}

cdouble Model::survival_amplitude(double t) const {
    if (det_.lambda.is_infinite()) return survival_amplitude_free(t, sys_);
    const double times[1] = {t};
    return fourier_integral(*table_, times, tol_).front();
}

double Model::survival_prob(double t) const { return std::norm(survival_amplitude(t)); }

cdouble Model::decay_amplitude(double k, double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("decay_amplitude: time must be >= 0");
    if (!std::isfinite(k)) throw std::invalid_argument("decay_amplitude: k must be finite");
    if (t == 0.0) return {0.0, 0.0};
    if (det_.lambda.is_infinite()) {
        const cdouble w(k, -0.5 * det_.sigma);
        const cdouble pole(0.0, -0.5 * sys_.gamma());
        return std::sqrt(sys_.gamma() / (2.0 * kPi)) * exp_divided_difference(w, pole, t, window_);
    }
    if (t > max_resolvable_time(*table_, tol_)) {
        throw NumericalError("decay_amplitude: t beyond the spectral grid resolution");
    }
    return Kernel(*this, t).amplitude(k);
}

double Model::inband_weight(const Kernel& kernel) const {
    Tolerances kt = tol_;
    kt.abs_tol = tol_.kspace_abs_tol;
    auto f = [&](double k) { return std::norm(kernel.amplitude(k)); };
    const auto r = integrate_adaptive(f, 0.0, det_.lambda.value(), kt);
    return 2.0 * require_converged(r, "in-band decay weight");
}

double Model::outer_weight(const Kernel& kernel, cdouble a) const {
    // Beyond the band, integrating the amplitude equation by parts gives
    //   b^C ~ sqrt(gamma/2pi) [(exp(-ikt) M - a) / k - i (a'(t) - exp(-ikt) a'(0)) / k^2].
    // Its square is subtracted under the integral and added back in closed
    // form, leaving an O(1/k^4) remainder for the quadrature.
    const double lam = det_.lambda.value();
    const double t = kernel.time();
    const double pref2 = kernel.prefactor() * kernel.prefactor();
    const double mass = table_->mass();
    const cdouble i(0.0, 1.0);
    const std::array<cdouble, 2> u = {-a, -i * kernel.survival_derivative()};
    const std::array<cdouble, 2> v = {mass, i * kernel.initial_derivative()};
    auto asymptote = [&](double k) {
        const cdouble phase = std::polar(1.0, -k * t);
        const cdouble first = u[0] + phase * v[0];
        const cdouble second = u[1] + phase * v[1];
        return pref2 * std::norm(first / k + second / (k * k));
    };
    auto f = [&](double k) { return std::norm(kernel.amplitude(k)) - asymptote(k); };
    Tolerances kt = tol_;
    kt.abs_tol = tol_.kspace_abs_tol;
    const auto r = integrate_semi_infinite(f, lam, kt, std::max(lam, sys_.gamma()));
    const double remainder = require_converged(r, "out-of-band decay weight");

    // \int_lam^inf k^-n and \int_lam^inf exp(-ikt) k^-n for n = 2..4; the
    // oscillatory ones by parts from the sine and cosine integrals.
    const double x = lam * t;
    std::array<double, 5> jc{}, js{}, power{};
    jc[1] = -gsl_sf_Ci(x);
    js[1] = 0.5 * kPi - gsl_sf_Si(x);
    for (int n = 2; n <= 4; ++n) {
        const double lead = std::pow(lam, 1 - n) / (n - 1);
        jc[n] = std::cos(x) * lead - t / (n - 1) * js[n - 1];
        js[n] = std::sin(x) * lead + t / (n - 1) * jc[n - 1];
        power[n] = lead;
    }
    double closed = 0.0;
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            const int n = p + q + 2;
            closed += (std::conj(u[p]) * u[q] + std::conj(v[p]) * v[q]).real() * power[n];
            closed += 2.0 * (std::conj(u[p]) * v[q] * cdouble(jc[n], -js[n])).real();
        }
    }
    return 2.0 * (remainder + pref2 * closed);
}

double Model::w(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("w_c: time must be >= 0");
    if (t == 0.0) return 0.0;
    if (det_.lambda.is_infinite()) return noclick_c_large_lambda(t, sys_, det_) - survival_prob_free(t, sys_);
    if (t > max_resolvable_time(*table_, tol_)) throw NumericalError("w_c: t beyond the spectral grid resolution");
    const Kernel kernel(*this, t);
    const cdouble a = survival_amplitude(t);
    return inband_weight(kernel) + outer_weight(kernel, a);
}

double Model::click_rate(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("click_rate: time must be >= 0");
    if (t == 0.0 || det_.sigma == 0.0) return 0.0;
    if (det_.lambda.is_infinite()) {
        return det_.sigma * std::abs(exp_difference_ratio(sys_.gamma(), det_.sigma, t));
    }
    return det_.sigma * inband_weight(Kernel(*this, t));
}

double Model::noclick(double t) const {
    if (t == 0.0) return 1.0;
    if (det_.lambda.is_infinite()) return noclick_c_large_lambda(t, sys_, det_);
    return survival_prob(t) + w(t);
}

// ---------------------------------------------------------------------------
// Free functions

ProbabilityCurve survival_prob_c(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                                 const Tolerances& tol) {
    check_time_grid(times);
    ProbabilityCurve curve{times, {}};
    if (det.lambda.is_infinite()) {
        for (double t : times) curve.values.push_back(survival_prob_free(t, sys));
        return curve;
    }
    const SpectralTable table = build_spectral_table(sys, det, tol);
    for (const cdouble a : fourier_integral(table, times, tol)) curve.values.push_back(std::norm(a));
    return curve;
}

cdouble decay_amplitude_c(double k, double t, const SystemParams& sys, const DetectorParams& det,
                          const SpectralTable& table, const Tolerances& tol) {
    return Model(sys, det, table, tol).decay_amplitude(k, t);
}

double w_c(double t, const SystemParams& sys, const DetectorParams& det, const SpectralTable& table,
           const Tolerances& tol) {
    return Model(sys, det, table, tol).w(t);
}

ProbabilityCurve noclick_c(const std::vector<double>& times, const Model& model) {
    check_time_grid(times);
    ProbabilityCurve curve{times, {}};
    curve.values.reserve(times.size());
    for (double t : times) curve.values.push_back(model.noclick(t));
    return curve;
}

ProbabilityCurve noclick_c(const std::vector<double>& times, const SystemParams& sys, const DetectorParams& det,
                           const Tolerances& tol) {
    return noclick_c(times, Model(sys, det, tol));
}

double noclick_c_inf(const SystemParams& sys, const DetectorParams& det, const Tolerances& tol) {
    if (!(det.sigma > 0.0)) throw std::invalid_argument("noclick_c_inf requires sigma > 0");
    if (det.lambda.is_infinite()) return 0.0;
    const SelfEnergyFn sigma_fn(sys, det, tol);
    const double lam = det.lambda.value();
    auto f = [&](double k) { return 1.0 / std::norm(k + sigma_fn.one_sided(k)); };
    const auto r = integrate_semi_infinite(f, lam, tol, std::max(lam, sys.gamma()));
    return sys.gamma() / kPi * require_converged(r, "noclick_c_inf");
}

double noclick_c_inf_large_sigma(const SystemParams& sys, const DetectorParams& det) {
    return 1.0 - pulsed::w_lambda_inf(sys, det);
}

double noclick_c_large_lambda(double t, const SystemParams& sys, const DetectorParams& det) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be >= 0");
    return std::exp(-sys.gamma() * t) + exp_difference_ratio(sys.gamma(), det.sigma, t);
}

ProbabilityCurve noclick_c_large_lambda(const std::vector<double>& times, const SystemParams& sys,
                                        const DetectorParams& det) {
    check_time_grid(times);
    ProbabilityCurve curve{times, {}};
    for (double t : times) curve.values.push_back(noclick_c_large_lambda(t, sys, det));
    return curve;
}

double effective_width(const SystemParams& sys, const DetectorParams& det) {
    det.validate();
    const double lam = det.lambda.as_double();
    const double half_sigma = 0.5 * det.sigma;
    // The ratio has unit modulus, so the logarithm is i times its argument.
    const double arg = std::atan2(half_sigma, -lam) - std::atan2(half_sigma, lam);
    return sys.gamma() / kPi * arg;
}

ProbabilityCurve noclick_c_approx(const std::vector<double>& times, const SystemParams& sys,
                                  const DetectorParams& det, const Tolerances& tol) {
    check_time_grid(times);
    const double p_inf = noclick_c_inf(sys, det, tol);
    const double width = effective_width(sys, det);
    ProbabilityCurve curve{times, {}};
    for (double t : times) curve.values.push_back((1.0 - p_inf) * std::exp(-width * t) + p_inf);
    return curve;
}

}  // namespace zeno::continuous
