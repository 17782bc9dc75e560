#pragma once

// Koenigs linearizing coordinate on the basin of an attracting fixed point.
//
// Values are carried in log form: log psi(z) = Log(u_0) - n Log(lambda)
//   + sum_k Log(g(u_k) / (lambda u_k)),
// where n is the entry time into the local disk, u_0 = f^n(z) - a and g is f
// recentred at the attractor. The sum is the direct limit
// lambda^-N (f^N(z) - a) written multiplicatively, so it never overflows even
// when |psi| exceeds the double range.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/polyfam.hpp"

namespace spinlab {

enum class Normalization { DerivativeOne, MarkedCritAtMinusOne };

inline constexpr int kDefaultOrbitBudget = 10000;

struct LinearizationChart {
    cplx attractor;
    cplx multiplier;
    double local_radius = 0.0;
    Normalization normalization = Normalization::DerivativeOne;
    std::string marked_label;
    /// -1 / psi(c_marked) in MarkedCritAtMinusOne mode, 1 otherwise.
    cplx normalization_constant{1.0, 0.0};
    /// psi(c_marked) and its log (same sheet as koenigs_log reports).
    cplx marked_value{0.0, 0.0};
    cplx marked_log{0.0, 0.0};
    /// f(a + u) - a as a polynomial in u, constant term forced to zero.
    std::vector<cplx> recentred;
    double escape_radius = 0.0;

    cplx local_map(cplx u) const { return poly::eval(recentred, u); }
};

struct OrbitEntry {
    int steps = 0;
    cplx landing_value;
};

struct KoenigsLog {
    /// log psi(z) for the derivative-one normalization; defined mod 2 pi i.
    cplx log_value;
    /// d log psi / dz.
    cplx dlog_dz;
    int steps = 0;
};

/// Reduces the imaginary part of a logarithm to (-pi, pi].
inline cplx wrap_log(cplx value)
{
    const double two_pi = 2.0 * std::numbers::pi;
    double im = std::remainder(value.imag(), two_pi);
    if (im <= -std::numbers::pi)
        im += two_pi;
    return {value.real(), im};
}

namespace detail {

/// Radius beyond which every orbit of `map` escapes: |z| > R implies |f(z)| >= 2|z|.
inline double orbit_escape_radius(const MarkedPolynomial& map) { return poly::escape_radius(map.coefficients()); }

inline double nearest_critical_distance(const MarkedPolynomial& map, cplx a)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cp : map.critical_points())
        best = std::min(best, std::abs(cp.location - a));
    return best;
}

/// Largest radius r = r_max / 2^k whose boundary circle (64 samples) maps to
/// within (1 + |lambda|)/2 * r of the attractor.
inline double contraction_radius(const std::vector<cplx>& recentred, double r_max, double lambda_abs)
{
    const double margin = 0.5 * (1.0 + lambda_abs);
    double r = r_max;
    for (int k = 0; k < 60; ++k, r *= 0.5) {
        double worst = 0.0;
        for (int j = 0; j < 64; ++j) {
            const cplx u = std::polar(r, 2.0 * std::numbers::pi * j / 64.0);
            worst = std::max(worst, std::abs(poly::eval(recentred, u)));
        }
        if (worst < margin * r)
            return r;
    }
    throw Error(ErrorCode::NoConvergence, "no contracting disk found around the attractor");
}

} // namespace detail

/// Chart on the basin of the attracting fixed point `attractor` (assumed
/// already refined) with the derivative-one normalization.
inline LinearizationChart make_chart(const MarkedPolynomial& map, cplx attractor)
{
    LinearizationChart chart;
    chart.attractor = attractor;
    chart.multiplier = map.derivative(attractor);
    const double m = std::abs(chart.multiplier);
    if (m < 1e-9)
        throw Error(ErrorCode::SuperattractingUnsupported, "multiplier below 1e-9");
    if (!(m < 1.0))
        throw Error(ErrorCode::NoConvergence, "fixed point is not attracting");
    chart.recentred = poly::shift(map.coefficients(), attractor);
    chart.recentred[0] = 0.0;
    chart.escape_radius = detail::orbit_escape_radius(map);
    double r_max = 0.5 * detail::nearest_critical_distance(map, attractor);
    if (!std::isfinite(r_max))
        r_max = 1.0;
    chart.local_radius = detail::contraction_radius(chart.recentred, r_max, m);
    return chart;
}

/// Iterates `seed` until it settles on an attracting fixed point, refines it
/// by Newton and builds the chart.
inline LinearizationChart find_attractor(const MarkedPolynomial& map, cplx seed, int budget = kDefaultOrbitBudget)
{
    const double escape = detail::orbit_escape_radius(map);
    cplx z = seed;
    bool settled = false;
    for (int k = 0; k <= budget; ++k) {
        const cplx next = map(z);
        if (!(std::abs(next) <= escape))
            throw Error(ErrorCode::NoConvergence, "orbit of the seed escapes");
        if (std::abs(next - z) <= 1e-13 * std::max(1.0, std::abs(z))) {
            settled = true;
            break;
        }
        z = next;
    }
    if (!settled)
        throw Error(ErrorCode::NoConvergence, "orbit did not settle within the budget");
    return make_chart(map, refine_fixed_point(map, z));
}

/// First entry of the orbit of z into the local disk |z - a| < r0.
inline OrbitEntry basin_entry(const MarkedPolynomial& map, const LinearizationChart& chart, cplx z,
                              int budget = kDefaultOrbitBudget)
{
    for (int n = 0; n <= budget; ++n) {
        if (std::abs(z - chart.attractor) < chart.local_radius)
            return {n, z};
        if (!(std::abs(z) <= chart.escape_radius))
            throw Error(ErrorCode::NotInBasin, "orbit escapes after " + std::to_string(n) + " steps");
        z = map(z);
    }
    throw Error(ErrorCode::NotInBasin, "orbit did not enter the linearization disk within the budget");
}

/// Log of the derivative-one Koenigs coordinate, with its z-derivative.
inline KoenigsLog koenigs_log(const LinearizationChart& chart, const MarkedPolynomial& map, cplx z,
                              double tol = 1e-15, int budget = kDefaultOrbitBudget)
{
    cplx orbit_derivative{1.0, 0.0};
    int n = 0;
    for (;; ++n) {
        if (std::abs(z - chart.attractor) < chart.local_radius)
            break;
        if (n >= budget || !(std::abs(z) <= chart.escape_radius))
            throw Error(ErrorCode::NotInBasin, "orbit did not enter the linearization disk");
        orbit_derivative *= map.derivative(z);
        z = map(z);
    }
    cplx u = z - chart.attractor;
    if (u == cplx{0.0, 0.0})
        return {cplx{-std::numeric_limits<double>::infinity(), 0.0}, cplx{0.0, 0.0}, n};

    const cplx log_lambda = std::log(chart.multiplier);
    cplx log_value = std::log(u) - static_cast<double>(n) * log_lambda;
    // d/du of the local log-coordinate, chained through du_k/du.
    cplx dlocal = 1.0 / u;
    cplx du{1.0, 0.0};
    for (int k = 0; k < 2000; ++k) {
        const auto jet = poly::eval_jet(chart.recentred, u);
        if (jet.value == cplx{0.0, 0.0})
            break;
        const cplx term = std::log(jet.value / (chart.multiplier * u));
        log_value += term;
        dlocal += (jet.d1 / jet.value - 1.0 / u) * du;
        du *= jet.d1;
        u = jet.value;
        if (std::abs(term) < tol)
            break;
    }
    return {log_value, dlocal * orbit_derivative, n};
}

/// psi(z), the Koenigs coordinate normalized to derivative one at the attractor.
inline cplx koenigs_value(const LinearizationChart& chart, const MarkedPolynomial& map, cplx z, double tol = 1e-15)
{
    return std::exp(koenigs_log(chart, map, z, tol).log_value);
}

/// Switches `chart` to the normalization sending critical point `label` to -1.
inline LinearizationChart with_marked_normalization(LinearizationChart chart, const MarkedPolynomial& map,
                                                    const std::string& label)
{
    const cplx c = map.critical_point(label).location;
    const auto lg = koenigs_log(chart, map, c);
    if (!(lg.log_value.real() > std::log(1e-12 * chart.local_radius)))
        throw Error(ErrorCode::MarkedCritAtAttractor,
                    "critical point '" + label + "' has psi = 0 (finite orbit onto the attractor)");
    chart.normalization = Normalization::MarkedCritAtMinusOne;
    chart.marked_label = label;
    chart.marked_log = lg.log_value;
    chart.marked_value = std::exp(lg.log_value);
    chart.normalization_constant = -1.0 / chart.marked_value;
    return chart;
}

/// Log of the normalized coordinate: log psi(z) - log psi(c_marked) + i pi,
/// imaginary part reduced to (-pi, pi].
inline cplx normalized_log(const LinearizationChart& chart, const MarkedPolynomial& map, cplx z)
{
    if (chart.normalization != Normalization::MarkedCritAtMinusOne)
        throw Error(ErrorCode::InvalidArgument, "chart is not in MarkedCritAtMinusOne mode");
    return wrap_log(koenigs_log(chart, map, z).log_value - chart.marked_log + cplx{0.0, std::numbers::pi});
}

/// phi(z) = -psi(z)/psi(c_marked): attractor to 0, marked critical point to -1.
inline cplx normalized_koenigs(const LinearizationChart& chart, const MarkedPolynomial& map, cplx z)
{
    if (chart.normalization != Normalization::MarkedCritAtMinusOne)
        throw Error(ErrorCode::InvalidArgument, "chart is not in MarkedCritAtMinusOne mode");
    return -std::exp(koenigs_log(chart, map, z).log_value - chart.marked_log);
}

namespace detail {

inline cplx solve_local(const LinearizationChart& chart, const MarkedPolynomial& map, cplx target, cplx start)
{
    cplx z = start;
    for (int it = 0; it < 60; ++it) {
        if (!(std::abs(z - chart.attractor) < chart.local_radius))
            throw Error(ErrorCode::NoPreimage, "local inversion left the linearization disk");
        const auto lg = koenigs_log(chart, map, z);
        const cplx value = std::exp(lg.log_value);
        const cplx deriv = value * lg.dlog_dz;
        const cplx step = (value - target) / deriv;
        z -= step;
        if (std::abs(step) < 1e-16 * std::max(chart.local_radius, std::abs(z)))
            return z;
    }
    const cplx residual = koenigs_value(chart, map, z) - target;
    if (std::abs(residual) < 1e-13 * std::max(1.0, std::abs(target)))
        return z;
    throw Error(ErrorCode::NoPreimage, "local inversion did not converge");
}

inline cplx pull_back(const MarkedPolynomial& map, cplx target, cplx start)
{
    cplx z = start;
    for (int it = 0; it < 100; ++it) {
        const auto jet = map.jet(z);
        if (jet.d1 == cplx{0.0, 0.0})
            z += 1e-7;
        const cplx step = (jet.value - target) / jet.d1;
        z -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(z)))
            break;
    }
    if (!(std::abs(map(z) - target) < 1e-12 * std::max(1.0, std::abs(target))))
        throw Error(ErrorCode::NoPreimage, "Newton pullback did not converge");
    for (const auto& cp : map.critical_points())
        if (std::abs(z - cp.location) < 1e-6)
            throw Error(ErrorCode::BranchAmbiguity, "pullback landed next to critical point '" + cp.label + "'");
    return z;
}

} // namespace detail

/// A point z with psi(z) = w on the sheet selected by `branch_hint`: w is
/// pushed into the local disk by powers of lambda, inverted there, then
/// pulled back along the orbit of the hint.
inline cplx koenigs_inverse(const LinearizationChart& chart, const MarkedPolynomial& map, cplx w, cplx branch_hint)
{
    if (w == cplx{0.0, 0.0})
        return chart.attractor;
    const double local_bound = 0.25 * chart.local_radius;
    std::vector<cplx> hints{branch_hint};
    cplx target = w;
    // Push until both w and the hint are local; a hint that never arrives
    // (outside the basin) is given up after 100 extra steps.
    int extra = 0;
    while (std::abs(target) > local_bound
           || (std::abs(hints.back() - chart.attractor) >= chart.local_radius && extra < 100)) {
        if (hints.size() > static_cast<std::size_t>(kDefaultOrbitBudget))
            throw Error(ErrorCode::NoPreimage, "w too large to bring into the local disk");
        if (std::abs(target) <= local_bound)
            ++extra;
        target *= chart.multiplier;
        cplx h = map(hints.back());
        if (!std::isfinite(h.real()) || !std::isfinite(h.imag()) || std::abs(h) > chart.escape_radius)
            h = chart.attractor + target;
        hints.push_back(h);
    }
    const std::size_t k = hints.size() - 1;
    cplx start = hints[k];
    if (!(std::abs(start - chart.attractor) < chart.local_radius))
        start = chart.attractor + target;
    cplx z = detail::solve_local(chart, map, target, start);
    for (std::size_t j = k; j-- > 0;)
        z = detail::pull_back(map, z, hints[j]);

    const cplx residual = koenigs_value(chart, map, z) - w;
    if (!(std::abs(residual) < 1e-9 * std::max(1.0, std::abs(w))))
        throw Error(ErrorCode::NoPreimage, "inverse failed the round-trip check");
    return z;
}

} // namespace spinlab
