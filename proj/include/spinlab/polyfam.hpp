#pragma once

// Critically marked polynomial families, their fixed points, multipliers and
// holomorphic indices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spinlab/error.hpp"

namespace spinlab {

using cplx = std::complex<double>;

namespace poly {

/// Horner evaluation of an ascending-coefficient polynomial.
inline cplx eval(std::span<const cplx> coeffs, cplx z)
{
    cplx acc{0.0, 0.0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        acc = acc * z + *it;
    return acc;
}

struct Jet {
    cplx value;
    cplx d1;
    cplx d2;
};

/// Value plus first and second derivative in one Horner pass.
inline Jet eval_jet(std::span<const cplx> coeffs, cplx z)
{
    Jet j{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        j.d2 = j.d2 * z + 2.0 * j.d1;
        j.d1 = j.d1 * z + j.value;
        j.value = j.value * z + *it;
    }
    return j;
}

inline std::vector<cplx> derivative(std::span<const cplx> coeffs)
{
    std::vector<cplx> out;
    for (std::size_t k = 1; k < coeffs.size(); ++k)
        out.push_back(coeffs[k] * static_cast<double>(k));
    return out;
}

inline std::vector<cplx> multiply(std::span<const cplx> p, std::span<const cplx> q)
{
    std::vector<cplx> out(p.size() + q.size() - 1, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j)
            out[i + j] += p[i] * q[j];
    return out;
}

/// Sum of |a_k| |z|^k, the natural scale for backward-error tests.
inline double magnitude_bound(std::span<const cplx> coeffs, double r)
{
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        acc = acc * r + std::abs(*it);
    return acc;
}

/// Smallest R >= 1 with |p(z)| >= 2|z| whenever |z| >= R: the positive root of
/// |a_d| r^d - 2r - sum_{k<d} |a_k| r^k, which has exactly one sign change.
inline double escape_radius(std::span<const cplx> coeffs)
{
    const std::size_t d = coeffs.size() - 1;
    const double lead = std::abs(coeffs[d]);
    const auto g = [&](double r) {
        double rest = 2.0 * r;
        double rk = 1.0;
        for (std::size_t k = 0; k < d; ++k, rk *= r)
            rest += std::abs(coeffs[k]) * rk;
        return lead * rk - rest;
    };
    double lo = 1.0, hi = 2.0;
    if (g(lo) >= 0.0)
        return lo;
    while (g(hi) < 0.0)
        hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

/// Taylor shift: coefficients of p(center + u) as a polynomial in u.
inline std::vector<cplx> shift(std::span<const cplx> coeffs, cplx center)
{
    std::vector<cplx> out(coeffs.begin(), coeffs.end());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t k = n - 1; k > i; --k)
            out[k - 1] += center * out[k];
    return out;
}

/// All complex roots by Aberth-Ehrlich simultaneous iteration, seeded on a
/// perturbed circle, then Newton-polished. Repeated roots come back as
/// tight clusters.
inline std::vector<cplx> roots(std::span<const cplx> coeffs, int max_iter = 500)
{
    std::size_t n = coeffs.size();
    while (n > 0 && coeffs[n - 1] == cplx{0.0, 0.0})
        --n;
    if (n < 2)
        throw Error(ErrorCode::InvalidArgument, "polynomial of degree < 1 has no roots");
    const std::span<const cplx> p = coeffs.first(n);
    const std::size_t deg = n - 1;
    const auto dp = derivative(p);

    // Mean root modulus as seed radius, with a rotation that breaks symmetry.
    double radius = std::pow(std::abs(p[0] / p[deg]), 1.0 / static_cast<double>(deg));
    if (!(radius > 1e-8) || !std::isfinite(radius))
        radius = 1.0;
    std::vector<cplx> z(deg);
    for (std::size_t k = 0; k < deg; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(deg) + 0.4;
        z[k] = std::polar(radius * (1.0 + 0.05 * static_cast<double>(k % 3)), theta);
    }

    std::vector<bool> done(deg, false);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        bool all_done = true;
        for (std::size_t k = 0; k < deg; ++k) {
            if (done[k])
                continue;
            const cplx pv = eval(p, z[k]);
            const double scale = magnitude_bound(p, std::abs(z[k]));
            if (std::abs(pv) <= 4e-16 * scale) {
                done[k] = true;
                continue;
            }
            const cplx ratio = pv / eval(dp, z[k]);
            cplx repulsion{0.0, 0.0};
            for (std::size_t j = 0; j < deg; ++j)
                if (j != k && z[j] != z[k])
                    repulsion += 1.0 / (z[k] - z[j]);
            const cplx step = ratio / (1.0 - ratio * repulsion);
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) {
                all_done = false;
                z[k] += cplx{1e-7, 1e-7} * std::max(1.0, std::abs(z[k]));
                continue;
            }
            z[k] -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z[k])))
                done[k] = true;
            else
                all_done = false;
        }
        if (all_done)
            break;
    }
    if (iter == max_iter)
        throw Error(ErrorCode::RootSolverFailure,
                    "Aberth iteration did not converge in " + std::to_string(max_iter) + " iterations");

    for (auto& r : z) {
        for (int k = 0; k < 3; ++k) {
            const cplx d = eval(dp, r);
            if (d == cplx{0.0, 0.0})
                break;
            const cplx next = r - eval(p, r) / d;
            if (std::abs(eval(p, next)) < std::abs(eval(p, r)))
                r = next;
            else
                break;
        }
    }
    return z;
}

} // namespace poly

struct CriticalPoint {
    std::string label;
    cplx location;
    int multiplicity = 1;
};

struct CubicSlice {
    cplx c;
};

struct GeneralMonic {
    std::vector<int> partition;
};

using FamilyTag = std::variant<CubicSlice, GeneralMonic>;

/// A polynomial together with its labelled critical points.
class MarkedPolynomial {
public:
    MarkedPolynomial(std::vector<cplx> coefficients, std::vector<CriticalPoint> critical_points, FamilyTag tag)
        : coeffs_(std::move(coefficients)), crit_(std::move(critical_points)), tag_(std::move(tag)),
          dcoeffs_(poly::derivative(coeffs_))
    {
        if (coeffs_.size() < 3)
            throw Error(ErrorCode::InvalidArgument, "degree must be at least 2");
    }

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<cplx>& coefficients() const noexcept { return coeffs_; }
    const std::vector<CriticalPoint>& critical_points() const noexcept { return crit_; }
    const FamilyTag& family() const noexcept { return tag_; }

    cplx operator()(cplx z) const { return poly::eval(coeffs_, z); }
    cplx derivative(cplx z) const { return poly::eval(dcoeffs_, z); }
    poly::Jet jet(cplx z) const { return poly::eval_jet(coeffs_, z); }

    const CriticalPoint& critical_point(std::string_view label) const
    {
        for (const auto& cp : crit_)
            if (cp.label == label)
                return cp;
        throw Error(ErrorCode::InvalidArgument, "no critical point labelled '" + std::string(label) + "'");
    }

    /// Parameter of the cubic slice, if this map belongs to it.
    std::optional<cplx> cubic_parameter() const
    {
        if (const auto* s = std::get_if<CubicSlice>(&tag_))
            return s->c;
        return std::nullopt;
    }

private:
    std::vector<cplx> coeffs_;
    std::vector<CriticalPoint> crit_;
    FamilyTag tag_;
    std::vector<cplx> dcoeffs_;
};

namespace cubic {

/// Quadratic coefficient a(c) = (c - 1/(2c))/2.
inline cplx a_of(cplx c) { return 0.5 * (c - 1.0 / (2.0 * c)); }
inline cplx da_dc(cplx c) { return 0.5 * (1.0 + 1.0 / (2.0 * c * c)); }
inline cplx b_of(cplx c) { return -1.0 / (2.0 * c); }
inline cplx db_dc(cplx c) { return 1.0 / (2.0 * c * c); }

/// c0 = sqrt(2)/2, where the slice member is odd.
inline const double c0 = std::numbers::sqrt2 / 2.0;
/// Limit of the real spinning ray from c0: sqrt(2/3) + sqrt(7/6).
inline const double c_infinity = std::sqrt(2.0 / 3.0) + std::sqrt(7.0 / 6.0);
/// Parabolic fixed point of f(c_infinity, .): sqrt(3/2).
inline const double parabolic_point = std::sqrt(1.5);

inline cplx eval(cplx c, cplx z) { return z * (0.5 + z * (a_of(c) - z / 3.0)); }
inline cplx dz(cplx c, cplx z) { return 0.5 + z * (2.0 * a_of(c) - z); }

/// f^n(z0(c)) and its total derivative in c, given dz0/dc.
inline std::pair<cplx, cplx> orbit_with_dc(cplx c, cplx z, cplx dz_dc, int steps)
{
    const cplx a = a_of(c);
    const cplx ap = da_dc(c);
    for (int k = 0; k < steps; ++k) {
        const cplx fz = 0.5 + z * (2.0 * a - z);
        dz_dc = fz * dz_dc + ap * z * z;
        z = z * (0.5 + z * (a - z / 3.0));
    }
    return {z, dz_dc};
}

} // namespace cubic

/// Member f(c, z) = z/2 + a z^2 - z^3/3 of the cubic slice, critical points
/// labelled "c" (= c) and "b" (= -1/(2c)).
inline MarkedPolynomial make_cubic(cplx c)
{
    if (c == cplx{0.0, 0.0})
        throw Error(ErrorCode::DegenerateParameter, "c = 0 leaves b = -1/(2c) undefined");
    const cplx a = cubic::a_of(c);
    return MarkedPolynomial({0.0, 0.5, a, -1.0 / 3.0},
                            {{"c", c, 1}, {"b", cubic::b_of(c), 1}}, CubicSlice{c});
}

/// f(z) = d * integral_0^z prod (zeta - c_m)^{d_m} dzeta: monic, fixes 0.
/// Critical points are labelled c1, c2, ...
inline MarkedPolynomial make_monic(std::span<const cplx> critical, std::span<const int> multiplicities)
{
    if (critical.empty() || critical.size() != multiplicities.size())
        throw Error(ErrorCode::InvalidArgument, "critical points and multiplicities must match and be non-empty");
    std::vector<cplx> prod{1.0};
    std::vector<CriticalPoint> marks;
    for (std::size_t m = 0; m < critical.size(); ++m) {
        if (multiplicities[m] < 1)
            throw Error(ErrorCode::InvalidArgument, "multiplicity must be positive");
        const std::vector<cplx> factor{-critical[m], 1.0};
        for (int k = 0; k < multiplicities[m]; ++k)
            prod = poly::multiply(prod, factor);
        marks.push_back({"c" + std::to_string(m + 1), critical[m], multiplicities[m]});
    }
    const double d = static_cast<double>(prod.size());
    std::vector<cplx> coeffs(prod.size() + 1, cplx{0.0, 0.0});
    for (std::size_t k = 0; k < prod.size(); ++k)
        coeffs[k + 1] = d * prod[k] / static_cast<double>(k + 1);
    std::vector<int> partition(multiplicities.begin(), multiplicities.end());
    return MarkedPolynomial(std::move(coeffs), std::move(marks), GeneralMonic{std::move(partition)});
}

enum class FixedPointClass {
    Attracting,
    Superattracting,
    Repelling,
    ParabolicMultiplierOne,
    IndifferentOther,
};

inline constexpr std::string_view to_string(FixedPointClass k)
{
    switch (k) {
    case FixedPointClass::Attracting: return "Attracting";
    case FixedPointClass::Superattracting: return "Superattracting";
    case FixedPointClass::Repelling: return "Repelling";
    case FixedPointClass::ParabolicMultiplierOne: return "ParabolicMultiplierOne";
    case FixedPointClass::IndifferentOther: return "IndifferentOther";
    }
    return "?";
}

inline constexpr double kMultiplierTol = 1e-9;

inline FixedPointClass classify_multiplier(cplx lambda)
{
    if (std::abs(lambda - 1.0) < kMultiplierTol)
        return FixedPointClass::ParabolicMultiplierOne;
    const double r = std::abs(lambda);
    if (r < kMultiplierTol)
        return FixedPointClass::Superattracting;
    if (r < 1.0 - kMultiplierTol)
        return FixedPointClass::Attracting;
    if (r > 1.0 + kMultiplierTol)
        return FixedPointClass::Repelling;
    return FixedPointClass::IndifferentOther;
}

struct FixedPointRecord {
    cplx location;
    cplx multiplier;
    FixedPointClass classification;
    cplx index;
    int multiplicity = 1;
};

namespace detail {

inline std::vector<cplx> fixed_point_polynomial(const MarkedPolynomial& map)
{
    std::vector<cplx> g = map.coefficients();
    g[1] -= 1.0;
    return g;
}

inline cplx contour_sum(const MarkedPolynomial& map, cplx center, double radius, int n, int start, int stride)
{
    cplx acc{0.0, 0.0};
    for (int k = start; k < n; k += stride) {
        const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
        const cplx z = center + radius * e;
        acc += radius * e / (z - map(z));
    }
    return acc;
}

} // namespace detail

/// Holomorphic index (1/2 pi i) \oint dz / (z - f(z)) by the trapezoid rule
/// on a uniform angular grid, doubled until successive values agree to 1e-10.
inline cplx index_contour(const MarkedPolynomial& map, cplx center, double radius)
{
    if (!(radius > 0.0))
        throw Error(ErrorCode::InvalidArgument, "contour radius must be positive");
    constexpr int n_start = 64;
    constexpr int n_max = 1 << 17;
    const double guard = 10.0 * 2.0 * std::numbers::pi * radius / (1 << 16);
    for (const cplx& r : poly::roots(detail::fixed_point_polynomial(map)))
        if (std::abs(std::abs(r - center) - radius) <= guard)
            throw Error(ErrorCode::FixedPointOnContour, "a fixed point lies within the quadrature guard band");

    int n = n_start;
    cplx sum = detail::contour_sum(map, center, radius, n, 0, 1);
    cplx prev = sum / static_cast<double>(n);
    while (n < n_max) {
        sum += detail::contour_sum(map, center, radius, 2 * n, 1, 2);
        n *= 2;
        const cplx cur = sum / static_cast<double>(n);
        if (std::abs(cur - prev) < 1e-10)
            return cur;
        prev = cur;
    }
    throw Error(ErrorCode::QuadratureNonConvergence, "trapezoid rule did not settle below 1e-10");
}

/// Newton polish of a simple root of f(z) - z.
inline cplx refine_fixed_point(const MarkedPolynomial& map, cplx z, int iterations = 8)
{
    for (int k = 0; k < iterations; ++k) {
        const auto j = map.jet(z);
        const cplx d = j.d1 - 1.0;
        if (d == cplx{0.0, 0.0})
            break;
        const cplx step = (j.value - z) / d;
        z -= step;
        if (std::abs(step) < 1e-17 * std::max(1.0, std::abs(z)))
            break;
    }
    return z;
}

/// All fixed points with multiplicity. Roots closer than 1e-6 (relative)
/// are merged into one record whose index comes from a contour integral.
inline std::vector<FixedPointRecord> fixed_points(const MarkedPolynomial& map)
{
    const auto raw = poly::roots(detail::fixed_point_polynomial(map));
    std::vector<std::vector<cplx>> clusters;
    for (const cplx& r : raw) {
        bool placed = false;
        for (auto& cl : clusters) {
            if (std::abs(cl.front() - r) < 1e-6 * std::max(1.0, std::abs(r))) {
                cl.push_back(r);
                placed = true;
                break;
            }
        }
        if (!placed)
            clusters.push_back({r});
    }

    std::vector<cplx> centers;
    for (const auto& cl : clusters) {
        cplx m{0.0, 0.0};
        for (const cplx& r : cl)
            m += r;
        centers.push_back(m / static_cast<double>(cl.size()));
    }

    std::vector<FixedPointRecord> out;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        FixedPointRecord rec;
        rec.multiplicity = static_cast<int>(clusters[i].size());
        if (rec.multiplicity == 1) {
            rec.location = refine_fixed_point(map, centers[i]);
            rec.multiplier = map.derivative(rec.location);
            rec.classification = classify_multiplier(rec.multiplier);
            rec.index = 1.0 / (1.0 - rec.multiplier);
        } else {
            rec.location = centers[i];
            rec.multiplier = map.derivative(rec.location);
            rec.classification = classify_multiplier(rec.multiplier);
            double sep = 1e-2 * std::max(1.0, std::abs(rec.location));
            for (std::size_t j = 0; j < clusters.size(); ++j)
                if (j != i)
                    sep = std::min(sep, 0.5 * std::abs(centers[j] - centers[i]));
            rec.index = index_contour(map, rec.location, sep);
        }
        out.push_back(rec);
    }
    return out;
}

/// Solution of the parabolic system {f(c,z) = z, f'(c,z) = 1} in the cubic slice.
struct ParabolicSolution {
    cplx c;
    cplx z;
    double fixed_residual;
    double multiplier_residual;
    int iterations;
};

/// Two-variable complex Newton on the parabolic system of the cubic slice.
inline ParabolicSolution solve_parabolic(cplx c, cplx z, int max_iter = 60)
{
    int it = 0;
    for (; it < max_iter; ++it) {
        const cplx a = cubic::a_of(c);
        const cplx ap = cubic::da_dc(c);
        const cplx f1 = cubic::eval(c, z) - z;
        const cplx f2 = cubic::dz(c, z) - 1.0;
        const cplx j11 = ap * z * z, j12 = cubic::dz(c, z) - 1.0;
        const cplx j21 = 2.0 * ap * z, j22 = 2.0 * a - 2.0 * z;
        const cplx det = j11 * j22 - j12 * j21;
        if (det == cplx{0.0, 0.0})
            throw Error(ErrorCode::NoConvergence, "singular Jacobian in parabolic solve");
        const cplx dc = (f1 * j22 - f2 * j12) / det;
        const cplx dzv = (j11 * f2 - j21 * f1) / det;
        c -= dc;
        z -= dzv;
        if (c == cplx{0.0, 0.0})
            throw Error(ErrorCode::DegenerateParameter, "parabolic solve reached c = 0");
        if (std::abs(dc) + std::abs(dzv) < 1e-15 * (std::abs(c) + std::abs(z)))
            break;
    }
    return {c, z, std::abs(cubic::eval(c, z) - z), std::abs(cubic::dz(c, z) - 1.0), it};
}

/// Solution of {f(c,z) = z, f^r(c, c) = z}: the spun critical point "c"
/// lands on a fixed point after r steps.
struct MisiurewiczSolution {
    cplx c;
    cplx z;
    double fixed_residual;
    double landing_residual;
    cplx multiplier;
};

inline MisiurewiczSolution solve_misiurewicz(cplx c, cplx z, int r, int max_iter = 60)
{
    if (r < 1)
        throw Error(ErrorCode::InvalidArgument, "Misiurewicz landing needs r >= 1");
    for (int it = 0; it < max_iter; ++it) {
        const auto [w, dw] = cubic::orbit_with_dc(c, c, 1.0, r);
        const cplx f1 = cubic::eval(c, z) - z;
        const cplx f2 = w - z;
        const cplx j11 = cubic::da_dc(c) * z * z, j12 = cubic::dz(c, z) - 1.0;
        const cplx j21 = dw, j22 = -1.0;
        const cplx det = j11 * j22 - j12 * j21;
        if (det == cplx{0.0, 0.0})
            throw Error(ErrorCode::NoConvergence, "singular Jacobian in Misiurewicz solve");
        const cplx dc = (f1 * j22 - f2 * j12) / det;
        const cplx dzv = (j11 * f2 - j21 * f1) / det;
        c -= dc;
        z -= dzv;
        if (!std::isfinite(std::abs(c)) || !std::isfinite(std::abs(z)) || c == cplx{0.0, 0.0})
            throw Error(ErrorCode::NoConvergence, "Misiurewicz solve diverged");
        if (std::abs(dc) + std::abs(dzv) < 1e-15 * (std::abs(c) + std::abs(z)))
            break;
        if (it + 1 == max_iter)
            throw Error(ErrorCode::NoConvergence, "Misiurewicz solve did not converge");
    }
    const auto [w, dw] = cubic::orbit_with_dc(c, c, 1.0, r);
    (void)dw;
    return {c, z, std::abs(cubic::eval(c, z) - z), std::abs(w - z), cubic::dz(c, z)};
}

} // namespace spinlab
