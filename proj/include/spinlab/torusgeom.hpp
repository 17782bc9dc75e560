#pragma once

// Quotient torus C*/(w ~ lambda w) in log coordinates, the annulus around the
// spun curve, and the spinning homeomorphism.
//
// A log-plane point L is read in the strip coordinate zeta = (L - base)/mu,
// where mu = -Log(lambda) + 2 pi i m is the core direction. One unit of
// `along` is one lattice step along the core; `across` is reduced modulo the
// transverse lattice period so that |across| is minimal.

#include <cmath>
#include <complex>
#include <numbers>

#include "spinlab/error.hpp"
#include "spinlab/polyfam.hpp"

namespace spinlab {

struct LogLattice {
    cplx gen_multiplier; // Log(lambda), principal branch
    cplx gen_loop{0.0, 2.0 * std::numbers::pi};
};

inline LogLattice make_lattice(cplx multiplier)
{
    const double r = std::abs(multiplier);
    if (!(r > 0.0 && r < 1.0))
        throw Error(ErrorCode::InvalidArgument, "lattice needs 0 < |lambda| < 1");
    return {std::log(multiplier)};
}

struct AnnulusSpec {
    cplx base_log;
    int twist = 0;
    double half_width = 0.0;
};

struct StripPoint {
    double along = 0.0;
    double across = 0.0;
};

enum class Region { Central, BufferPlus, BufferMinus, Outside, BoundaryBand };

inline constexpr std::string_view to_string(Region r)
{
    switch (r) {
    case Region::Central: return "Central";
    case Region::BufferPlus: return "BufferPlus";
    case Region::BufferMinus: return "BufferMinus";
    case Region::Outside: return "Outside";
    case Region::BoundaryBand: return "BoundaryBand";
    }
    return "?";
}

inline cplx core_direction(const AnnulusSpec& spec, const LogLattice& lattice)
{
    return -lattice.gen_multiplier + static_cast<double>(spec.twist) * lattice.gen_loop;
}

/// 2 pi i / mu: the lattice vector complementary to the core step.
inline cplx transverse_generator(const AnnulusSpec& spec, const LogLattice& lattice)
{
    return lattice.gen_loop / core_direction(spec, lattice);
}

/// Transverse period of the lattice in strip units.
inline double transverse_period(const AnnulusSpec& spec, const LogLattice& lattice)
{
    return std::abs(transverse_generator(spec, lattice).imag());
}

/// Default l: 0.8 times the largest half-width that still embeds A in T.
inline double default_half_width(int twist, const LogLattice& lattice)
{
    const AnnulusSpec probe{{0.0, 0.0}, twist, 1.0};
    return 0.8 * transverse_period(probe, lattice) / 4.0;
}

inline AnnulusSpec make_annulus(cplx base_log, int twist, const LogLattice& lattice, double half_width = 0.0)
{
    AnnulusSpec spec{base_log, twist, half_width > 0.0 ? half_width : default_half_width(twist, lattice)};
    if (!(core_direction(spec, lattice).real() > 0.0))
        throw Error(ErrorCode::InvalidAnnulus, "core direction must point away from the attractor");
    if (!(4.0 * spec.half_width < transverse_period(spec, lattice)))
        throw Error(ErrorCode::InvalidAnnulus, "annulus of half-width " + std::to_string(spec.half_width)
                                                   + " does not embed in the torus");
    return spec;
}

/// Strip coordinates of a log-plane point.
inline StripPoint strip_coords_log(const AnnulusSpec& spec, const LogLattice& lattice, cplx log_w)
{
    const cplx mu = core_direction(spec, lattice);
    const cplx tau = lattice.gen_loop / mu;
    cplx zeta = (log_w - spec.base_log) / mu;
    const double period = std::abs(tau.imag());
    const double sign = tau.imag() > 0.0 ? 1.0 : -1.0;
    // Representative with across in (-P/2, P/2]; ties go to the nonnegative side.
    const double k = std::ceil((zeta.imag() - 0.5 * period) / period);
    if (k != 0.0)
        zeta -= (k * sign) * tau;
    return {zeta.real(), zeta.imag()};
}

inline StripPoint strip_coords(const AnnulusSpec& spec, const LogLattice& lattice, cplx w)
{
    if (w == cplx{0.0, 0.0})
        throw Error(ErrorCode::InvalidArgument, "strip coordinates are undefined at w = 0");
    return strip_coords_log(spec, lattice, std::log(w));
}

inline Region classify_across(const AnnulusSpec& spec, double across, double band_eps = 0.0)
{
    const double y = std::abs(across);
    const double l = spec.half_width;
    if (band_eps > 0.0 && (std::abs(y - l) < band_eps || std::abs(y - 2.0 * l) < band_eps))
        return Region::BoundaryBand;
    if (y <= l)
        return Region::Central;
    if (y < 2.0 * l)
        return across > 0.0 ? Region::BufferPlus : Region::BufferMinus;
    return Region::Outside;
}

inline Region region(const AnnulusSpec& spec, const LogLattice& lattice, cplx w, double band_eps = 0.0)
{
    return classify_across(spec, strip_coords(spec, lattice, w).across, band_eps);
}

/// Translation by t on |y| <= l, interpolated to the identity at |y| = 2l.
inline StripPoint spin_homeo(const AnnulusSpec& spec, double t, StripPoint p)
{
    const double y = std::abs(p.across);
    const double l = spec.half_width;
    if (y <= l)
        p.along += t;
    else if (y <= 2.0 * l)
        p.along += t * (2.0 - y / l);
    return p;
}

/// Log of the spinning target: base_log + t mu.
inline cplx spin_target_log(const AnnulusSpec& spec, const LogLattice& lattice, double t)
{
    return spec.base_log + t * core_direction(spec, lattice);
}

/// exp(base_log + t mu); for m = 0 this is phi(c) lambda^-t.
inline cplx spin_target(const AnnulusSpec& spec, const LogLattice& lattice, double t)
{
    return std::exp(spin_target_log(spec, lattice, t));
}

} // namespace spinlab
