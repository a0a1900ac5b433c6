#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zeno/errors.hpp"
#include "zeno/model.hpp"

namespace zeno {

template <typename T>
struct QuadResult {
    T value{};
    double err_estimate = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

/// Returns `r.value` or throws NumericalError naming `what`.
template <typename T>
T require_converged(const QuadResult<T>& r, const std::string& what) {
    if (!r.converged) {
        throw NumericalError(what + ": quadrature did not converge (error estimate " +
                             std::to_string(r.err_estimate) + " after " +
                             std::to_string(r.evaluations) + " evaluations)");
    }
    return r.value;
}

namespace detail {

template <typename T>
struct Segment {
    double a, b;
    T value;
    double err;
    bool operator<(const Segment& o) const { return err < o.err; }
};

/// One 21-point Gauss-Kronrod panel. Error is |K21 - G10|, which is
/// pessimistic for smooth integrands but never optimistic.
template <typename T, typename F>
Segment<T> gk21_panel(F& f, double a, double b) {
    using rule = boost::math::quadrature::gauss_kronrod<double, 21>;
    static const auto& x = rule::abscissa();
    static const auto& wk = rule::weights();
    static const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    T fc = f(c);
    T kronrod = fc * wk[0];
    T gauss{};
    // Kronrod abscissae alternate: odd indices are the embedded Gauss nodes.
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double dx = h * x[i];
        const T fp = f(c + dx);
        const T fm = f(c - dx);
        kronrod += (fp + fm) * wk[i];
        if (i % 2 == 1) gauss += (fp + fm) * wg[(i - 1) / 2];
    }
    kronrod *= h;
    gauss *= h;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of `f` over [a, b] (finite, a < b).
/// Bisects the panel with the largest error until the summed estimate meets
/// max(abs_tol, rel_tol |value|) or the subdivision budget runs out; in the
/// latter case the result is returned with converged = false.
template <typename F>
auto integrate_adaptive(F&& f, double a, double b, const Tolerances& tol)
    -> QuadResult<std::decay_t<std::invoke_result_t<F&, double>>> {
    using T = std::decay_t<std::invoke_result_t<F&, double>>;
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("integrate_adaptive needs finite a < b");
    }
    std::priority_queue<detail::Segment<T>> heap;
    QuadResult<T> out;
    heap.push(detail::gk21_panel<T>(f, a, b));
    out.evaluations = 21;

    auto totals = [&heap]() {
        // Re-summing avoids drift from repeated add/subtract of large panels.
        auto copy = heap;
        T v{};
        double e = 0.0;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().err;
            copy.pop();
        }
        return std::pair<T, double>{v, e};
    };

    T value = heap.top().value;
    double err = heap.top().err;
    std::size_t splits = 0;
    while (err > std::max(tol.abs_tol, tol.rel_tol * std::abs(value))) {
        if (splits >= tol.max_subdivisions) {
            out.value = value;
            out.err_estimate = err;
            out.converged = false;
            return out;
        }
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in double precision.
            heap.push(worst);
            out.value = value;
            out.err_estimate = err;
            out.converged = false;
            return out;
        }
        auto left = detail::gk21_panel<T>(f, worst.a, mid);
        auto right = detail::gk21_panel<T>(f, mid, worst.b);
        out.evaluations += 42;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++splits;
        if (splits % 64 == 0) std::tie(value, err) = totals();
    }
    std::tie(value, err) = totals();
    out.value = value;
    out.err_estimate = err;
    out.converged = err <= std::max(tol.abs_tol, tol.rel_tol * std::abs(value));
    return out;
}

/// Integral of `f` over [a, inf) through k = a + scale u / (1 - u), u in [0, 1).
/// `f` must decay at least like 1/k^2.
template <typename F>
auto integrate_semi_infinite(F&& f, double a, const Tolerances& tol, double scale = 1.0)
    -> QuadResult<std::decay_t<std::invoke_result_t<F&, double>>> {
    using T = std::decay_t<std::invoke_result_t<F&, double>>;
    if (!std::isfinite(a)) throw std::invalid_argument("integrate_semi_infinite needs a finite lower limit");
    if (!(scale > 0.0)) throw std::invalid_argument("mapping scale must be positive");
    auto mapped = [&](double u) -> T {
        const double one_minus = 1.0 - u;
        const double k = a + scale * u / one_minus;
        if (!std::isfinite(k)) return T{};
        return f(k) * (scale / (one_minus * one_minus));
    };
    return integrate_adaptive(mapped, 0.0, 1.0, tol);
}

/// (exp(-i w t) - exp(-i e t)) / (w - e), the kernel of the decay amplitude.
/// Within |w - e| < window the removable singularity is replaced by the
/// two-term expansion exp(-i w t) (-i t + t^2 (w - e) / 2).
cdouble exp_divided_difference(cdouble w, cdouble e, double t, double window);

/// Energy distribution sampled on a uniform grid on [-e_max, e_max], with
/// the tail carried by a reference sum of Lorentzians c_j / (E^2 + w_j^2 / 4)
/// whose Fourier transform is known in closed form. The reference matches the
/// C / E^2 + D / E^4 behaviour fitted at e_max and e_max / 2.
///
/// Integrals against the table use Gregory-corrected trapezoid weights on
/// the residual density - reference, except in windows around declared
/// singular points, where graded Gauss-Legendre panels replace the grid.
class SpectralTable {
public:
    struct Layout {
        double e_max = 40.0;
        std::size_t points = std::size_t{1} << 16;
        /// Width of the leading reference Lorentzian.
        double reference_width = 1.0;
        /// Points where the density is continuous but not smooth (band edges).
        std::vector<double> singular_points;
    };

    static SpectralTable sample(const std::function<double(double)>& density, const Layout& layout);

    std::span<const double> energies() const { return energies_; }
    std::span<const double> densities() const { return densities_; }
    struct Lorentzian {
        double coefficient;
        double width;
    };

    /// C in density ~ C / E^2.
    double tail_coefficient() const;
    std::span<const Lorentzian> reference_terms() const { return reference_; }
    double spacing() const { return spacing_; }
    double e_max() const { return layout_.e_max; }
    const Layout& layout() const { return layout_; }

    /// Quadrature rule for the residual: nodes, weight * residual.
    std::span<const double> rule_nodes() const { return rule_nodes_; }
    std::span<const double> rule_weighted_residual() const { return rule_wres_; }

    /// Reference at E.
    double reference(double e) const;
    /// Total weight of the reference over the real line.
    double reference_mass() const;
    /// Fourier transform of the reference, \int dE reference(E) exp(-i E t).
    double reference_transform(double t) const;
    /// Integral of the density over the real line, tail included.
    double mass() const;
    bool same_layout(const SpectralTable& other) const;

    SpectralTable scaled(double c) const;
    friend SpectralTable operator+(const SpectralTable& a, const SpectralTable& b);

private:
    Layout layout_;
    double spacing_ = 0.0;
    std::vector<Lorentzian> reference_;
    std::vector<double> energies_;
    std::vector<double> densities_;
    std::vector<double> rule_nodes_;
    std::vector<double> rule_wres_;
};

/// a(t) = \int dE d(E) exp(-i E t) for each t. Rejects negative t and any t
/// with t * spacing > tol.max_phase_step.
std::vector<cdouble> fourier_integral(const SpectralTable& table, std::span<const double> times,
                                      const Tolerances& tol);

/// Largest time the table resolves under `tol`.
double max_resolvable_time(const SpectralTable& table, const Tolerances& tol);

}  // namespace zeno
