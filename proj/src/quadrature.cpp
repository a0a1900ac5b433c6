#include "zeno/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace zeno {

namespace {

// Grading ratio and depth of the band-edge panels.
constexpr double kGrading = 0.2;
constexpr double kGradingDepth = 1e-13;

cdouble exp_minus_i(cdouble w, double t) {
    return std::exp(w.imag() * t) * std::polar(1.0, -w.real() * t);
}

// Gregory end-corrected trapezoid weights (error O(h^4)) for nodes first..last.
void add_gregory_weights(std::vector<double>& w, std::size_t first, std::size_t last, double h) {
    const std::size_t n = last - first + 1;
    if (n < 6) throw std::invalid_argument("spectral grid too coarse: a smooth piece has fewer than 6 nodes");
    static constexpr double end[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
    for (std::size_t i = first; i <= last; ++i) w[i] += h;
    for (std::size_t j = 0; j < 3; ++j) {
        w[first + j] += h * (end[j] - 1.0);
        w[last - j] += h * (end[j] - 1.0);
    }
}

// Geometric Gauss-Legendre panels on [from, to] accumulating toward `to`.
void add_graded_side(double from, double to, const std::function<double(double)>& density,
                     const SpectralTable& self, std::vector<double>& nodes, std::vector<double>& wres) {
    using rule = boost::math::quadrature::gauss<double, 12>;
    const auto& x = rule::abscissa();
    const auto& wt = rule::weights();
    const double length = to - from;
    const double floor = kGradingDepth * std::max(1.0, std::abs(to));
    double dist = std::abs(length);
    double lo = from;
    while (dist > floor) {
        const double next_dist = dist * kGrading;
        const double hi = to - std::copysign(next_dist, length);
        const double c = 0.5 * (lo + hi);
        const double h = 0.5 * (hi - lo);
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (double sgn : {-1.0, 1.0}) {
                if (x[i] == 0.0 && sgn > 0.0) continue;
                const double e = c + sgn * h * x[i];
                const double weight = std::abs(h) * wt[i];
                nodes.push_back(e);
                wres.push_back(weight * (density(e) - self.reference(e)));
            }
        }
        lo = hi;
        dist = next_dist;
    }
}

// Lorentzians reproducing C / E^2 + D / E^4, with C and D fitted to the
// density at e_max and e_max / 2. The second term has width chosen so that
// its coefficient is -+C.
std::vector<SpectralTable::Lorentzian> fit_tail(double d1, double e1, double d2, double width) {
    const double x1 = 1.0 / (e1 * e1);
    const double x2 = 4.0 * x1;
    const double d_coef = (d2 / x2 - d1 / x1) / (x2 - x1);
    const double c_coef = d1 / x1 - d_coef * x1;
    const double a1 = 0.25 * width * width;
    const double excess = c_coef != 0.0 ? d_coef / c_coef + a1 : 0.0;
    if (!(std::abs(excess) > 1e-9 * a1)) return {{c_coef, width}};
    const double second = std::sqrt(4.0 * (a1 + std::abs(excess)));
    const double c2 = excess > 0.0 ? -c_coef : c_coef;
    return {{c_coef - c2, width}, {c2, second}};
}

}  // namespace

cdouble exp_divided_difference(cdouble w, cdouble e, double t, double window) {
    const cdouble x = w - e;
    const cdouble ew = exp_minus_i(w, t);
    if (std::abs(x.real()) < window && std::abs(x.imag()) < window) {
        return ew * (cdouble(0.0, -t) + 0.5 * t * t * x);
    }
    return (ew - exp_minus_i(e, t)) / x;
}

double SpectralTable::tail_coefficient() const {
    double c = 0.0;
    for (const auto& l : reference_) c += l.coefficient;
    return c;
}

double SpectralTable::reference(double e) const {
    double r = 0.0;
    for (const auto& l : reference_) r += l.coefficient / (e * e + 0.25 * l.width * l.width);
    return r;
}

double SpectralTable::reference_mass() const {
    double m = 0.0;
    for (const auto& l : reference_) m += l.coefficient * 2.0 * kPi / l.width;
    return m;
}

double SpectralTable::reference_transform(double t) const {
    double m = 0.0;
    for (const auto& l : reference_) m += l.coefficient * 2.0 * kPi / l.width * std::exp(-0.5 * l.width * t);
    return m;
}

double SpectralTable::mass() const {
    double m = reference_mass();
    for (double v : rule_wres_) m += v;
    return m;
}

SpectralTable SpectralTable::sample(const std::function<double(double)>& density, const Layout& layout) {
    if (!(layout.e_max > 0.0) || layout.points < 2 || !(layout.reference_width > 0.0)) {
        throw std::invalid_argument("invalid spectral table layout");
    }
    SpectralTable t;
    t.layout_ = layout;
    std::sort(t.layout_.singular_points.begin(), t.layout_.singular_points.end());
    const std::size_t n = layout.points;
    const double emax = layout.e_max;
    const double h = 2.0 * emax / static_cast<double>(n - 1);
    t.spacing_ = h;
    t.energies_.resize(n);
    t.densities_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        t.energies_[j] = (j + 1 == n) ? emax : -emax + static_cast<double>(j) * h;
        t.densities_[j] = density(t.energies_[j]);
    }
    const double half = 0.5 * layout.reference_width;
    t.reference_ = fit_tail(0.5 * (t.densities_.front() + t.densities_.back()), emax,
                            0.5 * (density(0.5 * emax) + density(-0.5 * emax)), layout.reference_width);

    // Patch windows [first node, last node] around each interior singular point.
    struct Window {
        std::size_t lo, hi;
        double point;
    };
    std::vector<Window> windows;
    const auto& sing = t.layout_.singular_points;
    for (std::size_t i = 0; i < sing.size(); ++i) {
        const double s = sing[i];
        if (!(s > -emax && s < emax)) continue;
        double w = std::max(8.0 * h, half);
        w = std::min(w, 0.45 * (emax - std::abs(s)));
        if (i > 0) w = std::min(w, 0.45 * (s - sing[i - 1]));
        if (i + 1 < sing.size()) w = std::min(w, 0.45 * (sing[i + 1] - s));
        const auto lo = static_cast<std::size_t>(std::floor((s - w + emax) / h));
        const auto hi = static_cast<std::size_t>(std::ceil((s + w + emax) / h));
        if (lo >= hi || hi >= n) throw std::invalid_argument("spectral grid too coarse around a singular point");
        windows.push_back({lo, hi, s});
    }

    std::vector<double> weights(n, 0.0);
    std::size_t start = 0;
    for (const auto& win : windows) {
        add_gregory_weights(weights, start, win.lo, h);
        start = win.hi;
    }
    add_gregory_weights(weights, start, n - 1, h);

    for (std::size_t j = 0; j < n; ++j) {
        if (weights[j] == 0.0) continue;
        t.rule_nodes_.push_back(t.energies_[j]);
        t.rule_wres_.push_back(weights[j] * (t.densities_[j] - t.reference(t.energies_[j])));
    }
    for (const auto& win : windows) {
        add_graded_side(t.energies_[win.lo], win.point, density, t, t.rule_nodes_, t.rule_wres_);
        add_graded_side(t.energies_[win.hi], win.point, density, t, t.rule_nodes_, t.rule_wres_);
    }
    return t;
}

bool SpectralTable::same_layout(const SpectralTable& other) const {
    return layout_.e_max == other.layout_.e_max && layout_.points == other.layout_.points &&
           layout_.reference_width == other.layout_.reference_width &&
           layout_.singular_points == other.layout_.singular_points && rule_nodes_ == other.rule_nodes_;
}

SpectralTable SpectralTable::scaled(double c) const {
    SpectralTable out = *this;
    for (auto& l : out.reference_) l.coefficient *= c;
    for (double& d : out.densities_) d *= c;
    for (double& v : out.rule_wres_) v *= c;
    return out;
}

SpectralTable operator+(const SpectralTable& a, const SpectralTable& b) {
    if (!a.same_layout(b)) throw std::invalid_argument("spectral tables with different layouts cannot be added");
    SpectralTable out = a;
    out.reference_.insert(out.reference_.end(), b.reference_.begin(), b.reference_.end());
    for (std::size_t i = 0; i < out.densities_.size(); ++i) out.densities_[i] += b.densities_[i];
    for (std::size_t i = 0; i < out.rule_wres_.size(); ++i) out.rule_wres_[i] += b.rule_wres_[i];
    return out;
}

double max_resolvable_time(const SpectralTable& table, const Tolerances& tol) {
    return tol.max_phase_step / table.spacing();
}

std::vector<cdouble> fourier_integral(const SpectralTable& table, std::span<const double> times,
                                      const Tolerances& tol) {
    const double t_max = max_resolvable_time(table, tol);
    const auto nodes = table.rule_nodes();
    const auto wres = table.rule_weighted_residual();
    std::vector<cdouble> out;
    out.reserve(times.size());
    for (double t : times) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("fourier_integral: time must be >= 0");
        if (t > t_max) {
            throw NumericalError("fourier_integral: t = " + std::to_string(t) +
                                 " exceeds the grid resolution limit " + std::to_string(t_max));
        }
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double phase = nodes[i] * t;
            re += wres[i] * std::cos(phase);
            im -= wres[i] * std::sin(phase);
        }
        out.emplace_back(re + table.reference_transform(t), im);
    }
    return out;
}

}  // namespace zeno
