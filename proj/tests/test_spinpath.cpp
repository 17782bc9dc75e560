#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spinlab/spinpath.hpp"
#include "support.hpp"

using namespace spinlab;
using spinlab::testing::Gen;
using spinlab::testing::dist;

namespace {

const SpinTrace& f0_trace()
{
    static const SpinTrace tr = [] {
        const CubicSliceProblem p(cubic::c0, 0);
        return trace(p, TraceConfig{}, CVector{cubic::c0});
    }();
    return tr;
}

SpinTrace single_state(cplx c)
{
    SpinTrace tr;
    SpinState s;
    s.parameter = c;
    s.coordinates = {c};
    tr.states.push_back(s);
    return tr;
}

double corrector_bound(const SpinProblem& p, double t, const TraceConfig& cfg)
{
    return cfg.corrector_tol * std::abs(core_direction(p.annulus(), p.lattice())) * std::max(1.0, t);
}

} // namespace

TEST(CubicSlice, ResidualVanishesAtTheStart)
{
    const CubicSliceProblem p(cubic::c0, 0);
    EXPECT_LT(std::abs(p.residual(CVector{cubic::c0}, 0.0)[0]), 1e-14);
}

TEST(CubicSlice, AnalyticJacobianMatchesFiniteDifference)
{
    Gen g(51);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const cplx c = g.box(2.0, 1.5) + cplx(0.0, 0.05);
        cplx analytic;
        try {
            analytic = CubicSliceProblem::log_derivative(c);
        } catch (const Error&) {
            continue; // a critical orbit escapes
        }
        const double h = 1e-6;
        const cplx fd = wrap_log(CubicSliceProblem::raw_log(c + h) - CubicSliceProblem::raw_log(c - h)) / (2.0 * h);
        EXPECT_LT(dist(fd, analytic), 1e-6 * std::max(1.0, std::abs(analytic))) << "c = " << c;
        ++checked;
    }
    EXPECT_GT(checked, 5);
}

TEST(Trace, LandsOnTheParabolicParameter)
{
    const auto& tr = f0_trace();
    ASSERT_EQ(tr.outcome.kind, OutcomeKind::Landed);
    EXPECT_EQ(tr.outcome.limit_class, LimitClass::ParabolicCreation);
    EXPECT_LT(dist(tr.outcome.parameter_limit, cubic::c_infinity), 1e-5);
    ASSERT_TRUE(tr.outcome.special_point.has_value());
    EXPECT_LT(dist(*tr.outcome.special_point, std::sqrt(1.5)), 1e-6);
}

TEST(Trace, AcceptedStatesSatisfyTheCorrectorBound)
{
    const auto& tr = f0_trace();
    const CubicSliceProblem p(cubic::c0, 0);
    const TraceConfig cfg;
    for (const auto& s : tr.states) {
        const double r = std::abs(p.residual(s.coordinates, s.t)[0]);
        // Stalled Newton steps are accepted up to 1e3 times the tolerance.
        EXPECT_LT(r, 1e3 * corrector_bound(p, s.t, cfg)) << "t = " << s.t;
        EXPECT_LE(s.newton_residual, 1e3 * corrector_bound(p, s.t, cfg));
    }
}

TEST(Trace, TimesIncreaseAndTrackedPairStaysApart)
{
    const auto& tr = f0_trace();
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
        EXPECT_GT(tr.states[k].t, tr.states[k - 1].t);
        EXPECT_GT(std::abs(tr.states[k].u_plus - tr.states[k].u_minus), 1e-9);
    }
}

TEST(Trace, SymmetricStartStaysReal)
{
    // f(conj c) is conjugate to f(c); a real start must keep c real.
    for (const auto& s : f0_trace().states)
        EXPECT_LT(std::abs(s.parameter.imag()), 1e-12);
}

TEST(Trace, IntegerTimeTranslation)
{
    const CubicSliceProblem p(cubic::c0, 0);
    const TraceConfig cfg;
    const auto& tr = f0_trace();
    for (const double n : {1.0, 2.0, 5.0}) {
        const cplx cn = state_at(p, tr, n, cfg)[0];
        const cplx direct = state_at(p, tr, n + 1.0, cfg)[0];
        const CubicSliceProblem restarted(cn, 0);
        const cplx again = state_at(restarted, single_state(cn), 1.0, cfg)[0];
        EXPECT_LT(dist(direct, again), 1e-8) << "n = " << n;
    }
}

TEST(Trace, HalvedInitialStepAgrees)
{
    const CubicSliceProblem p(cubic::c0, 0);
    TraceConfig cfg;
    cfg.t_step_init *= 0.5;
    const auto tr = trace(p, cfg, CVector{cubic::c0});
    ASSERT_EQ(tr.outcome.kind, OutcomeKind::Landed);
    EXPECT_LT(dist(tr.outcome.parameter_limit, f0_trace().outcome.parameter_limit), 1e-6);
}

TEST(Trace, BudgetExhaustion)
{
    const CubicSliceProblem p(cubic::c0, 0);
    TraceConfig cfg;
    cfg.max_t = 0.5;
    const auto tr = trace(p, cfg, CVector{cubic::c0});
    EXPECT_EQ(tr.outcome.kind, OutcomeKind::Aborted);
    EXPECT_EQ(tr.outcome.abort_reason, AbortReason::BudgetExhausted);
}

TEST(Trace, RejectsBadStepControls)
{
    const CubicSliceProblem p(cubic::c0, 0);
    TraceConfig cfg;
    cfg.t_step_min = 1.0;
    EXPECT_THROW((void)trace(p, cfg, CVector{cubic::c0}), Error);
}

TEST(Trace, VisibleAfterOneLandsOnAPreperiodicParameter)
{
    // Oracle by hand: at c = i sqrt(3), a = 7i / (4 sqrt(3)) and f(c) = -i sqrt(3) / 4,
    // a root of z^2 - 3az + 3/2 = 0, i.e. a fixed point.
    const cplx c_start{0.0, 1.3};
    const CubicSliceProblem p(c_start, 0);
    TraceConfig cfg;
    cfg.visible_after = 1;
    const auto tr = trace(p, cfg, CVector{c_start});
    ASSERT_EQ(tr.outcome.kind, OutcomeKind::Landed) << tr.outcome.message;
    EXPECT_EQ(tr.outcome.limit_class, LimitClass::MisiurewiczLanding);
    EXPECT_EQ(tr.outcome.misiurewicz_steps, 1);
    EXPECT_LT(dist(tr.outcome.parameter_limit, cplx(0.0, std::sqrt(3.0))), 1e-9);
    ASSERT_TRUE(tr.outcome.special_point.has_value());
    EXPECT_LT(dist(*tr.outcome.special_point, cplx(0.0, -std::sqrt(3.0) / 4.0)), 1e-9);
    EXPECT_GT(std::abs(*tr.outcome.special_multiplier), 1.0);
}

TEST(MonicSlice, JacobianMatchesFiniteDifference)
{
    Gen g(52);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 10; ++trial) {
        const auto parts = g.partition(g.integer(3, 5), 3);
        if (parts.size() < 2)
            continue;
        CVector x0;
        for (std::size_t k = 0; k < parts.size(); ++k)
            x0.push_back(g.disk(0.0, 0.6));
        std::unique_ptr<MonicSliceProblem> p;
        try {
            p = std::make_unique<MonicSliceProblem>(x0, parts, 1, 0, 0);
        } catch (const Error&) {
            continue; // not an attracting normalization or a critical orbit escapes
        }
        CVector x = x0;
        for (auto& v : x)
            v += g.disk(0.0, 1e-3);
        linalg::CMatrix jac(x.size());
        try {
            jac = p->jacobian(x, 0.2, 1e-6);
        } catch (const Error&) {
            continue;
        }
        const double h = 1e-7;
        for (std::size_t k = 0; k < x.size(); ++k) {
            CVector xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const auto rp = p->residual(xp, 0.2), rm = p->residual(xm, 0.2);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const cplx fd = wrap_log(rp[i] - rm[i]) / (2.0 * h);
                EXPECT_LT(dist(fd, jac(i, k)), 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
        ++checked;
    }
    EXPECT_GT(checked, 3);
}

TEST(MonicSlice, ConjugateOfTheCubicSliceLandsOnTheConjugateLimit)
{
    // g(z) = z^3 + z/2 is f0 conjugated by z -> k z with k = i / sqrt(3).
    const cplx k{0.0, 1.0 / std::sqrt(3.0)};
    const CVector x0{k * cubic::c0, -k * cubic::c0};
    const std::vector<int> mult{1, 1};
    const MonicSliceProblem p(x0, mult, 1, 0, 0);
    EXPECT_LT(dist(p.multiplier(), 0.5), 1e-15);
    const auto tr = trace(p, TraceConfig{}, x0);
    ASSERT_EQ(tr.outcome.kind, OutcomeKind::Landed) << tr.outcome.message;
    EXPECT_EQ(tr.outcome.limit_class, LimitClass::ParabolicCreation);
    EXPECT_LT(dist(tr.outcome.coordinates_limit[0], k * cubic::c_infinity), 1e-8);
    EXPECT_LT(dist(tr.outcome.coordinates_limit[1], k * cubic::b_of(cubic::c_infinity)), 1e-8);
}

TEST(MonicSlice, RejectsSameMarkedAndSpun)
{
    const CVector x0{0.5, -0.5};
    const std::vector<int> mult{1, 1};
    EXPECT_THROW(MonicSliceProblem(x0, mult, 0, 0, 0), Error);
}

TEST(Landing, DetectorNeedsEnoughStates)
{
    std::vector<SpinState> few(5);
    for (std::size_t k = 0; k < few.size(); ++k) {
        few[k].parameter = 1.0 + std::pow(0.5, static_cast<double>(k));
        few[k].coordinates = {few[k].parameter};
    }
    EXPECT_EQ(detect_landing(few, TraceConfig{}).kind, LimitClass::None);
}

TEST(Landing, GeometricTailExtrapolatesExactly)
{
    std::vector<SpinState> s(12);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double e = std::pow(0.25, static_cast<double>(k));
        s[k].parameter = 2.0 + e;
        s[k].coordinates = {s[k].parameter};
        s[k].lambda_plus = 1.0 + 1e-2 * e;
        s[k].lambda_minus = 1.0 - 1e-2 * e;
    }
    const auto v = detect_landing(s, TraceConfig{});
    EXPECT_EQ(v.kind, LimitClass::ParabolicCreation);
    EXPECT_NEAR(v.ratio, 0.25, 1e-9);
    EXPECT_LT(std::abs(v.extrapolated[0] - 2.0), 1e-12);
}

TEST(Landing, DivergenceByRadius)
{
    std::vector<SpinState> s(1);
    s[0].parameter = 500.0;
    s[0].coordinates = {s[0].parameter};
    EXPECT_EQ(detect_landing(s, TraceConfig{}).kind, LimitClass::Diverged);
}
