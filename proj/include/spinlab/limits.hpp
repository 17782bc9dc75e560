#pragma once

// Invariant-strip boundary curves, their fixed endpoints, and the per-state
// coalescence diagnostics of the tracked repelling pair.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/koenigs.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/spinpath.hpp"
#include "spinlab/torusgeom.hpp"

namespace spinlab {

enum class Side { Plus, Minus };

inline constexpr std::string_view to_string(Side s) { return s == Side::Plus ? "Plus" : "Minus"; }

struct StripCurve {
    Side side = Side::Plus;
    std::vector<cplx> samples;
    /// |psi| of the boundary-line point behind each sample.
    std::vector<double> param_values;
    /// Samples per multiplication of |psi| by 1/|lambda|.
    int per_step = 16;
    /// Empty unless sampling stopped before `reach`.
    std::string stopped;
};

/// Lift of the line across = +-l (side Plus / Minus) through the Koenigs
/// coordinate. |psi| grows geometrically from r0/2 to `reach`, `per_step`
/// samples per dynamical step, each inversion seeded by the previous sample.
inline StripCurve boundary_lift_curve(const MarkedPolynomial& map, const LinearizationChart& chart,
                                      const AnnulusSpec& annulus, const LogLattice& lattice, Side side, double reach,
                                      int per_step = 16)
{
    if (chart.normalization != Normalization::MarkedCritAtMinusOne)
        throw Error(ErrorCode::InvalidArgument, "boundary curves need a marked-normalized chart");
    if (!(reach > chart.local_radius))
        throw Error(ErrorCode::InvalidArgument, "reach must exceed the linearization radius");
    if (per_step < 1)
        throw Error(ErrorCode::InvalidArgument, "per_step must be positive");
    const cplx mu = core_direction(annulus, lattice);
    const double y = side == Side::Plus ? annulus.half_width : -annulus.half_width;
    // Log of psi at strip point (x, y): base + mu (x + i y) + marked_log - i pi.
    const cplx offset = annulus.base_log + chart.marked_log - cplx{0.0, std::numbers::pi} + mu * cplx{0.0, y};
    const double ratio = std::pow(1.0 / std::abs(chart.multiplier), 1.0 / per_step);

    StripCurve curve;
    curve.side = side;
    curve.per_step = per_step;
    cplx hint = chart.attractor;
    for (double rho = 0.5 * chart.local_radius; rho <= reach * (1.0 + 1e-12); rho *= ratio) {
        const double x = (std::log(rho) - offset.real()) / mu.real();
        const cplx lw = offset + mu * x;
        const cplx w = std::polar(rho, lw.imag());
        if (curve.samples.empty())
            hint = chart.attractor + w;
        try {
            const cplx z = koenigs_inverse(chart, map, w, hint);
            curve.samples.push_back(z);
            curve.param_values.push_back(rho);
            hint = z;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BranchAmbiguity && e.code() != ErrorCode::NoPreimage)
                throw;
            curve.stopped = e.what();
            break;
        }
    }
    return curve;
}

struct EndpointEstimate {
    cplx location;
    cplx multiplier;
    double refinement_residual = 0.0;
    /// Tail limit before snapping to the fixed point.
    cplx tail_limit;
};

/// Backward endpoint of a strip curve: Aitken limit over the last three
/// dynamical steps, then the nearest fixed point, Newton-polished.
inline EndpointEstimate endpoint(const StripCurve& curve, const MarkedPolynomial& map)
{
    const std::size_t q = static_cast<std::size_t>(curve.per_step);
    const std::size_t n = curve.samples.size();
    if (n < 20 || n < 3 * q + 1)
        throw Error(ErrorCode::TailNotConverging, "curve too short for a tail estimate");
    const auto& s = curve.samples;
    const cplx x0 = s[n - 1 - 2 * q], x1 = s[n - 1 - q], x2 = s[n - 1];
    const cplx d1 = x1 - x0, d2 = x2 - x1;
    if (!(std::abs(d2) < std::abs(d1)))
        throw Error(ErrorCode::TailNotConverging, "tail increments are not decreasing");
    const cplx denom = d2 - d1;
    const cplx limit = denom == cplx{0.0, 0.0} ? x2 : x2 - d2 * d2 / denom;

    const auto fps = fixed_points(map);
    const FixedPointRecord* best = &fps.front();
    for (const auto& fp : fps)
        if (std::abs(fp.location - limit) < std::abs(best->location - limit))
            best = &fp;
    cplx z = best->multiplicity > 1 ? best->location : refine_fixed_point(map, best->location);
    if (std::abs(map(z) - z) > std::abs(map(best->location) - best->location))
        z = best->location;
    const double residual = std::abs(map(z) - z);
    if (!(residual < 1e-10))
        throw Error(ErrorCode::TailNotConverging, "fixed point polish left residual " + std::to_string(residual));
    return {z, map.derivative(z), residual, limit};
}

/// Symmetric Hausdorff distance of two sample sets.
inline double hausdorff_distance(std::span<const cplx> a, std::span<const cplx> b)
{
    if (a.empty() || b.empty())
        throw Error(ErrorCode::InvalidArgument, "Hausdorff distance of an empty set");
    const auto directed = [](std::span<const cplx> p, std::span<const cplx> q) {
        double worst = 0.0;
        for (const cplx& x : p) {
            double best = std::numeric_limits<double>::infinity();
            for (const cplx& y : q)
                best = std::min(best, std::norm(x - y));
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(a, b), directed(b, a));
}

inline double hausdorff_distance(const StripCurve& a, const StripCurve& b)
{
    return hausdorff_distance(a.samples, b.samples);
}

struct CoalescenceRow {
    double t = 0.0;
    cplx u_plus, u_minus;
    cplx lambda_plus, lambda_minus;
    double index_sum_real = 0.0;
    double tangency_plus = 0.0;
    double tangency_minus = 0.0;
    double separation = 0.0;
};

struct CoalescenceReport {
    std::vector<CoalescenceRow> rows;
    bool index_violation = false;
    bool coalesced_at_finite_t = false;
    /// Smallest index_sum_real seen.
    double index_lower_envelope = std::numeric_limits<double>::infinity();
};

inline double index_term(cplx lambda) { return (1.0 / (1.0 - lambda)).real(); }

inline CoalescenceReport coalescence_report(const SpinTrace& trace)
{
    if (trace.states.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "coalescence report needs at least two states");
    CoalescenceReport rep;
    const bool parabolic = trace.outcome.limit_class == LimitClass::ParabolicCreation;
    for (const auto& s : trace.states) {
        CoalescenceRow row;
        row.t = s.t;
        row.u_plus = s.u_plus;
        row.u_minus = s.u_minus;
        row.lambda_plus = s.lambda_plus;
        row.lambda_minus = s.lambda_minus;
        row.index_sum_real = index_term(s.lambda_plus) + index_term(s.lambda_minus);
        row.tangency_plus = std::abs(std::arg(1.0 - s.lambda_plus));
        row.tangency_minus = std::abs(std::arg(1.0 - s.lambda_minus));
        row.separation = std::abs(s.u_plus - s.u_minus);
        rep.index_violation = rep.index_violation || !(row.index_sum_real < 1.0);
        rep.coalesced_at_finite_t = rep.coalesced_at_finite_t || (parabolic && !(row.separation > 1e-9));
        rep.index_lower_envelope = std::min(rep.index_lower_envelope, row.index_sum_real);
        rep.rows.push_back(row);
    }
    return rep;
}

struct TransversalCount {
    /// Crossings weighted by orientation.
    int net = 0;
    int raw = 0;
};

/// Signed crossings of the polyline through `curve` with the segment p -> q.
/// A crossing counts +1 when the curve passes from the right of p -> q to its left.
inline TransversalCount transversal_count(std::span<const cplx> curve, cplx p, cplx q)
{
    const auto cross = [](cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); };
    const auto point_segment = [](cplx z, cplx a, cplx b) {
        const cplx ab = b - a;
        const double len2 = std::norm(ab);
        const double s = len2 > 0.0 ? std::clamp(((z - a) * std::conj(ab)).real() / len2, 0.0, 1.0) : 0.0;
        return std::abs(z - (a + s * ab));
    };
    TransversalCount out;
    if (curve.size() < 2)
        return out;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        if (point_segment(p, curve[i], curve[i + 1]) < 1e-9 || point_segment(q, curve[i], curve[i + 1]) < 1e-9)
            throw Error(ErrorCode::EndpointOnCurve, "segment endpoint lies on the curve");
    const cplx d = q - p;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const cplx a = curve[i], b = curve[i + 1];
        const double sa = cross(d, a - p), sb = cross(d, b - p);
        if ((sa > 0.0) == (sb > 0.0) || sa == sb)
            continue;
        const cplx e = b - a;
        const double ta = cross(e, p - a), tb = cross(e, q - a);
        if ((ta > 0.0) == (tb > 0.0))
            continue;
        ++out.raw;
        out.net += sb > sa ? 1 : -1;
    }
    return out;
}

} // namespace spinlab
