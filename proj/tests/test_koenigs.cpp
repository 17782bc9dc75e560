#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spinlab/koenigs.hpp"
#include "support.hpp"

using namespace spinlab;
using spinlab::testing::Gen;
using spinlab::testing::dist;

namespace {

struct F0 {
    MarkedPolynomial map = make_cubic(cubic::c0);
    LinearizationChart chart = with_marked_normalization(make_chart(map, 0.0), map, "b");
};

/// Rejection sample of a point whose orbit enters the local disk.
cplx basin_sample(Gen& g, const MarkedPolynomial& map, const LinearizationChart& chart)
{
    for (;;) {
        const cplx z = g.disk(0.0, chart.escape_radius);
        try {
            (void)basin_entry(map, chart, z, 300);
            return z;
        } catch (const Error&) {
        }
    }
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(Chart, LocalDiskIsStrictlyContracting)
{
    const F0 f;
    EXPECT_GT(f.chart.local_radius, 0.0);
    EXPECT_LT(f.chart.local_radius, cubic::c0);
    for (int j = 0; j < 720; ++j) {
        const cplx u = std::polar(f.chart.local_radius, 2.0 * std::numbers::pi * j / 720.0);
        EXPECT_LT(std::abs(f.map(u)), f.chart.local_radius);
    }
}

TEST(Chart, FindAttractorFromSeed)
{
    const F0 f;
    const auto chart = find_attractor(f.map, cplx(0.2, 0.1));
    EXPECT_LT(std::abs(chart.attractor), 1e-14);
    EXPECT_LT(dist(chart.multiplier, 0.5), 1e-14);
}

TEST(Chart, SuperattractingIsRejected)
{
    const std::vector<cplx> crit{0.0, 1.0};
    const std::vector<int> mult{1, 1};
    const auto f = make_monic(crit, mult);
    EXPECT_EQ(code_of([&] { (void)make_chart(f, 0.0); }), ErrorCode::SuperattractingUnsupported);
}

TEST(Basin, EntryAndEscape)
{
    const F0 f;
    const auto e = basin_entry(f.map, f.chart, 1.0);
    EXPECT_GE(e.steps, 1);
    EXPECT_LT(std::abs(e.landing_value), f.chart.local_radius);
    EXPECT_EQ(code_of([&] { (void)basin_entry(f.map, f.chart, 3.0); }), ErrorCode::NotInBasin);
}

TEST(Koenigs, DerivativeOneAtTheAttractor)
{
    const F0 f;
    const double h = 1e-5;
    const cplx d = (koenigs_value(f.chart, f.map, h) - koenigs_value(f.chart, f.map, -h)) / (2.0 * h);
    EXPECT_LT(dist(d, 1.0), 1e-9);
}

TEST(Koenigs, FunctionalEquationOnBasinSamples)
{
    const F0 f;
    Gen g(101);
    for (int k = 0; k < 500; ++k) {
        const cplx z = basin_sample(g, f.map, f.chart);
        const cplx lhs = koenigs_value(f.chart, f.map, f.map(z));
        const cplx rhs = f.chart.multiplier * koenigs_value(f.chart, f.map, z);
        EXPECT_LT(std::abs(lhs - rhs), 1e-9 * std::max(1.0, std::abs(rhs))) << "z = " << z;
    }
}

TEST(Koenigs, LogDerivativeIsHolomorphic)
{
    const F0 f;
    Gen g(102);
    for (int k = 0; k < 50; ++k) {
        const cplx z = basin_sample(g, f.map, f.chart);
        const auto lg = koenigs_log(f.chart, f.map, z);
        const double h = 1e-7;
        const cplx dx = wrap_log(koenigs_log(f.chart, f.map, z + h).log_value
                                 - koenigs_log(f.chart, f.map, z - h).log_value) / (2.0 * h);
        const cplx dy = wrap_log(koenigs_log(f.chart, f.map, z + cplx(0.0, h)).log_value
                                 - koenigs_log(f.chart, f.map, z - cplx(0.0, h)).log_value) / (2.0 * h * cplx(0.0, 1.0));
        const double scale = std::max(1.0, std::abs(lg.dlog_dz));
        EXPECT_LT(std::abs(dx - dy), 1e-5 * scale);
        EXPECT_LT(std::abs(dx - lg.dlog_dz), 1e-5 * scale);
    }
}

TEST(Koenigs, InverseRoundTrip)
{
    const F0 f;
    Gen g(103);
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
        const cplx z = basin_sample(g, f.map, f.chart);
        const cplx w = koenigs_value(f.chart, f.map, z);
        try {
            const cplx back = koenigs_inverse(f.chart, f.map, w, z);
            EXPECT_LT(std::abs(back - z), 1e-8) << "z = " << z;
            ++checked;
        } catch (const Error& e) {
            // Orbits that pass within 1e-6 of a critical point are ambiguous by contract.
            EXPECT_EQ(e.code(), ErrorCode::BranchAmbiguity);
        }
    }
    EXPECT_GT(checked, 190);
}

TEST(Koenigs, MarkedPointIsMinusOne)
{
    const F0 f;
    const cplx b = f.map.critical_point("b").location;
    EXPECT_EQ(normalized_koenigs(f.chart, f.map, b), cplx(-1.0, 0.0));
    EXPECT_LT(dist(f.chart.normalization_constant * koenigs_value(f.chart, f.map, b), -1.0), 1e-12);
    EXPECT_LT(dist(normalized_log(f.chart, f.map, b), cplx(0.0, std::numbers::pi)), 1e-15);
    // Oddness of f0: the other critical point sits at +1.
    EXPECT_LT(dist(normalized_koenigs(f.chart, f.map, cubic::c0), 1.0), 1e-12);
}

TEST(Koenigs, MarkedPointOnTheAttractorIsRejected)
{
    // f(c, c) = 0 exactly when c^2 = -3/2.
    const cplx c{0.0, std::sqrt(1.5)};
    const auto map = make_cubic(c);
    EXPECT_LT(std::abs(map(c)), 1e-15);
    EXPECT_EQ(code_of([&] { (void)with_marked_normalization(make_chart(map, 0.0), map, "c"); }),
              ErrorCode::MarkedCritAtAttractor);
}

TEST(Koenigs, WrapLogRange)
{
    EXPECT_DOUBLE_EQ(wrap_log(cplx(1.0, 3.0 * std::numbers::pi)).imag(), std::numbers::pi);
    EXPECT_NEAR(wrap_log(cplx(0.0, -std::numbers::pi)).imag(), std::numbers::pi, 1e-15);
    EXPECT_NEAR(wrap_log(cplx(0.0, 7.0)).imag(), 7.0 - 2.0 * std::numbers::pi, 1e-15);
}

TEST(Koenigs, InverseFollowsTheHintOffTheLocalSheet)
{
    // psi(z) is small here although z is far from the attractor; the
    // principal local preimage would be the wrong point.
    const F0 f;
    const cplx z{-1.249553, -0.031958};
    const cplx w = koenigs_value(f.chart, f.map, z);
    EXPECT_LT(std::abs(w), 0.25 * f.chart.local_radius);
    EXPECT_LT(dist(koenigs_inverse(f.chart, f.map, w, z), z), 1e-8);
}
