// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "spinlab/koenigs.hpp"
#include "spinlab/limits.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/spinpath.hpp"
#include "spinlab/torusgeom.hpp"
#include "spinlab/visibility.hpp"

using namespace spinlab;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            if (!detail.empty())
                detail += "; ";
            detail += what;
        }
    }
};

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

int failures = 0;

void run(int id, const char* name, const std::function<Check()>& body)
{
    Check c;
    try {
        c = body();
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("exception: ") + e.what();
    }
    failures += c.ok ? 0 : 1;
    std::printf("[%s] %2d %s%s%s\n", c.ok ? "PASS" : "FAIL", id, name, c.detail.empty() ? "" : ": ",
                c.detail.c_str());
    std::fflush(stdout);
}

struct Shipped {
    SpinTrace trace;
    double seconds = 0.0;
};

const Shipped& shipped()
{
    static const Shipped s = [] {
        const auto t0 = std::chrono::steady_clock::now();
        const CubicSliceProblem p(cubic::c0, 0);
        Shipped out{trace(p, TraceConfig{}, CVector{cubic::c0}), 0.0};
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }();
    return s;
}

/// Closed form for the limit, from a = 1/z and a^2 = 2/3 on the parabolic pair.
const double kLimitOracle = std::sqrt(2.0 / 3.0) + std::sqrt(7.0 / 6.0);
const double kParabolicOracle = std::sqrt(1.5);

GridMasks cubic_masks(cplx c, int res)
{
    const auto s = cubic_visibility_setup(c, 0);
    return build_masks(s.map, s.chart, s.annulus, s.lattice, default_grid(s.chart, res));
}

} // namespace

int main()
{
    run(1, "landing value", [] {
        Check c;
        const auto& s = shipped();
        c.require(s.trace.outcome.kind == OutcomeKind::Landed, "trace did not land: " + s.trace.outcome.message);
        const double err = std::abs(s.trace.outcome.parameter_limit - kLimitOracle);
        c.require(err < 1e-5, "|c_limit - oracle| = " + num(err));
        c.require(s.seconds < 60.0, "runtime " + num(s.seconds) + " s");
        if (c.ok)
            c.detail = "|c_limit - oracle| = " + num(err) + " in " + num(s.seconds) + " s";
        return c;
    });

    run(2, "parabolic creation", [] {
        Check c;
        const auto& out = shipped().trace.outcome;
        c.require(out.limit_class == LimitClass::ParabolicCreation, "limit class is not ParabolicCreation");
        const auto& last = shipped().trace.states.back();
        const auto sol = solve_parabolic(out.parameter_limit, 0.5 * (last.u_plus + last.u_minus));
        const double fixed = std::abs(cubic::eval(sol.c, sol.z) - sol.z);
        const double mult = std::abs(cubic::dz(sol.c, sol.z) - 1.0);
        const double loc = std::abs(sol.z - kParabolicOracle);
        c.require(fixed < 1e-10, "|f(z*) - z*| = " + num(fixed));
        c.require(mult < 1e-8, "|f'(z*) - 1| = " + num(mult));
        c.require(loc < 1e-6, "|z* - sqrt(3/2)| = " + num(loc));
        c.require(std::abs(sol.c - out.parameter_limit) < 1e-6, "Newton moved c_limit");
        if (c.ok)
            c.detail = "|z* - sqrt(3/2)| = " + num(loc);
        return c;
    });

    run(3, "index inequality", [] {
        Check c;
        const auto& tr = shipped().trace;
        const auto rep = coalescence_report(tr);
        double worst = -1e300;
        for (const auto& row : rep.rows)
            worst = std::max(worst, row.index_sum_real);
        c.require(!rep.index_violation && worst < 1.0, "max index sum " + num(worst));
        const double start = rep.rows.front().index_sum_real;
        c.require(std::abs(start + 2.0) < 1e-8, "index sum at t = 0 is " + num(start));
        // Final decade: states whose distance to the limit is within 10x the last one.
        const cplx lim = tr.outcome.parameter_limit;
        const double last = std::abs(lim - tr.states.back().parameter);
        double min_angle = 1e300;
        int n = 0;
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            if (std::abs(lim - tr.states[k].parameter) > 10.0 * last)
                continue;
            min_angle = std::min({min_angle, rep.rows[k].tangency_plus, rep.rows[k].tangency_minus});
            ++n;
        }
        c.require(n > 0, "empty final decade");
        c.require(min_angle > std::numbers::pi / 2.0 - 0.2, "min |arg(1 - lambda)| = " + num(min_angle));
        if (c.ok)
            c.detail = "max sum " + num(worst) + ", min angle " + num(min_angle) + " over " + std::to_string(n) + " states";
        return c;
    });

    run(4, "coalescence", [] {
        Check c;
        const auto& tr = shipped().trace;
        double min_sep = 1e300;
        for (const auto& s : tr.states)
            min_sep = std::min(min_sep, std::abs(s.u_plus - s.u_minus));
        c.require(min_sep > 1e-9, "min separation " + num(min_sep));
        const auto& last = tr.states.back();
        const double dp = std::abs(last.u_plus - kParabolicOracle), dm = std::abs(last.u_minus - kParabolicOracle);
        c.require(dp < 1e-3 && dm < 1e-3, "|u+ - z*| = " + num(dp) + ", |u- - z*| = " + num(dm));
        if (c.ok)
            c.detail = "t_final = " + num(last.t) + ", |u+- - z*| <= " + num(std::max(dp, dm));
        return c;
    });

    run(5, "Koenigs contract", [] {
        Check c;
        const auto map = make_cubic(cubic::c0);
        const auto chart = with_marked_normalization(make_chart(map, 0.0), map, "b");
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst_fe = 0.0, worst_rt = 0.0;
        int samples = 0, ambiguous = 0;
        while (samples < 500) {
            const cplx z{chart.escape_radius * u(rng), chart.escape_radius * u(rng)};
            try {
                (void)basin_entry(map, chart, z, 300);
            } catch (const Error&) {
                continue;
            }
            ++samples;
            const cplx w = koenigs_value(chart, map, z);
            worst_fe = std::max(worst_fe, std::abs(koenigs_value(chart, map, map(z)) - chart.multiplier * w)
                                              / std::max(1.0, std::abs(w)));
            try {
                worst_rt = std::max(worst_rt, std::abs(koenigs_inverse(chart, map, w, z) - z));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::BranchAmbiguity)
                    throw;
                ++ambiguous;
            }
        }
        c.require(worst_fe < 1e-9, "functional equation residual " + num(worst_fe));
        c.require(worst_rt < 1e-8, "round trip residual " + num(worst_rt));
        c.require(ambiguous <= 25, std::to_string(ambiguous) + " ambiguous inversions");
        const cplx b = map.critical_point("b").location;
        c.require(normalized_koenigs(chart, map, b) == cplx(-1.0, 0.0), "marked value not exactly -1");
        const double recomputed = std::abs(chart.normalization_constant * koenigs_value(chart, map, b) + 1.0);
        c.require(recomputed < 1e-12, "recomputed marked value off by " + num(recomputed));
        if (c.ok)
            c.detail = "FE " + num(worst_fe) + ", round trip " + num(worst_rt) + " (" + std::to_string(ambiguous)
                       + " ambiguous skipped)";
        return c;
    });

    run(6, "index formula", [] {
        Check c;
        const auto f0 = make_cubic(cubic::c0);
        double worst = 0.0;
        for (const auto& fp : fixed_points(f0))
            worst = std::max(worst, std::abs(index_contour(f0, fp.location, 0.3) - 1.0 / (1.0 - fp.multiplier)));
        const double total = std::abs(index_contour(f0, 0.0, 3.0));
        c.require(worst < 1e-8, "contour vs 1/(1 - lambda) off by " + num(worst));
        c.require(total < 1e-8, "full-circle sum " + num(total));
        if (c.ok)
            c.detail = "max error " + num(worst) + ", full circle " + num(total);
        return c;
    });

    run(7, "visibility", [] {
        Check c;
        for (const int res : {512, 1024}) {
            const auto rep = classify_critical_points(cubic_masks(cubic::c0, res));
            c.require(rep.at("c").result.kind == VisibilityKind::Visible && rep.at("b").result.kind == VisibilityKind::Visible,
                      "f0 at " + std::to_string(res) + ": c " + to_string(rep.at("c").result) + ", b "
                          + to_string(rep.at("b").result));
        }
        // Scanned parameter with b visible and c visible only after one step.
        const cplx scanned{0.0, 1.3};
        for (const int res : {1024, 2048}) {
            const auto rep = classify_critical_points(cubic_masks(scanned, res));
            c.require(rep.at("c").result == VisibilityResult{VisibilityKind::VisibleAfter, 1}
                          && rep.at("b").result.kind == VisibilityKind::Visible,
                      "c = 1.3i at " + std::to_string(res) + ": c " + to_string(rep.at("c").result) + ", b "
                          + to_string(rep.at("b").result));
        }
        if (c.ok)
            c.detail = "f0 Visible/Visible at 512 and 1024; c = 1.3i VisibleAfter(1)/Visible at 1024 and 2048";
        return c;
    });

    run(8, "spin homeomorphism", [] {
        Check c;
        const auto lat = make_lattice(0.5);
        const auto spec = make_annulus(0.0, 0, lat);
        const double l = spec.half_width;
        // Bitwise equality needs an exactly representable ramp 2 - y/l, so the
        // algebraic laws run on a dyadic half-width.
        const auto dyadic_spec = make_annulus(0.0, 0, lat, 1.0);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const auto dyadic = [&](double range) { return std::round(u(rng) * range * 64.0) / 64.0; };
        bool group = true, boundary = true;
        for (int k = 0; k < 5000; ++k) {
            const StripPoint p{dyadic(8.0), dyadic(2.5)};
            const double s = dyadic(4.0), t = dyadic(4.0);
            const auto two = spin_homeo(dyadic_spec, s, spin_homeo(dyadic_spec, t, p));
            const auto one = spin_homeo(dyadic_spec, s + t, p);
            group = group && two.along == one.along && two.across == one.across;
            group = group && spin_homeo(dyadic_spec, 0.0, p).along == p.along;
            const double y = (k % 2 ? 2.0 : -2.0) * l;
            const double x = 10.0 * u(rng);
            const auto q = spin_homeo(spec, 10.0 * u(rng), {x, y});
            boundary = boundary && q.across == y && q.along == x;
        }
        c.require(group, "group law not exact");
        c.require(boundary, "boundary not fixed exactly");
        double jump = 0.0;
        for (const double t : {0.3, 1.0, 7.5, 100.0})
            for (const double y : {l, 2.0 * l, -l, -2.0 * l}) {
                const double sgn = y < 0 ? -1.0 : 1.0;
                const auto a = spin_homeo(spec, t, {0.0, sgn * std::nextafter(std::abs(y), 0.0)});
                const auto b = spin_homeo(spec, t, {0.0, sgn * std::nextafter(std::abs(y), 10.0)});
                jump = std::max(jump, std::abs(a.along - b.along));
            }
        c.require(jump < 1e-12, "continuity jump " + num(jump));
        const auto f0 = make_cubic(cubic::c0);
        const auto chart = with_marked_normalization(make_chart(f0, 0.0), f0, "b");
        const auto f0_spec = make_annulus(normalized_log(chart, f0, cubic::c0), 0, lat);
        double core = 0.0;
        for (const double t : {0.0, 0.3, 1.0, 7.5}) {
            const auto p = strip_coords(f0_spec, lat, spin_target(f0_spec, lat, t));
            core = std::max({core, std::abs(p.along - t), std::abs(p.across)});
        }
        c.require(core < 1e-12, "spin target off the core by " + num(core));
        if (c.ok)
            c.detail = "jump " + num(jump) + ", core " + num(core);
        return c;
    });

    run(9, "path robustness", [] {
        Check c;
        const CubicSliceProblem p(cubic::c0, 0);
        TraceConfig half;
        half.t_step_init *= 0.5;
        const auto tr = trace(p, half, CVector{cubic::c0});
        const double diff = std::abs(tr.outcome.parameter_limit - shipped().trace.outcome.parameter_limit);
        c.require(tr.outcome.kind == OutcomeKind::Landed, "halved-step trace did not land");
        c.require(diff < 1e-6, "halved step moves c_limit by " + num(diff));
        const TraceConfig cfg;
        double worst = 0.0;
        for (const double n : {1.0, 2.0, 3.0, 10.0}) {
            const cplx cn = state_at(p, shipped().trace, n, cfg)[0];
            const cplx direct = state_at(p, shipped().trace, n + 1.0, cfg)[0];
            SpinTrace restart;
            restart.states.resize(1);
            restart.states[0].parameter = cn;
            restart.states[0].coordinates = {cn};
            const cplx again = state_at(CubicSliceProblem(cn, 0), restart, 1.0, cfg)[0];
            worst = std::max(worst, std::abs(direct - again));
        }
        c.require(worst < 1e-8, "translation defect " + num(worst));
        if (c.ok)
            c.detail = "halving moves c_limit by " + num(diff) + ", translation defect " + num(worst);
        return c;
    });

    run(10, "connectedness bound", [] {
        Check c;
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_int_distribution<int> deg(2, 5);
        int connected = 0, attempts = 0;
        double largest = 0.0;
        while (connected < 50 && attempts < 200000) {
            ++attempts;
            const int d = deg(rng);
            std::vector<int> mult;
            for (int left = d - 1; left > 0;) {
                const int k = std::uniform_int_distribution<int>(1, left)(rng);
                mult.push_back(k);
                left -= k;
            }
            std::vector<cplx> crit;
            for (std::size_t k = 0; k < mult.size(); ++k) {
                cplx z;
                do
                    z = {6.0 * u(rng), 6.0 * u(rng)};
                while (std::abs(z) > 6.0);
                crit.push_back(z);
            }
            const auto f = make_monic(crit, mult);
            bool escapes = false;
            for (const cplx& cp : crit) {
                cplx z = cp;
                for (int n = 0; n < 2000 && !escapes; ++n) {
                    z = f(z);
                    escapes = std::abs(z) > 8.0;
                }
            }
            if (escapes)
                continue;
            ++connected;
            for (const cplx& cp : crit)
                largest = std::max(largest, std::abs(cp));
        }
        c.require(connected == 50, "only " + std::to_string(connected) + " connected samples");
        c.require(largest <= 4.0 + 1e-9, "critical point at radius " + num(largest));
        if (c.ok)
            c.detail = "50 samples from " + std::to_string(attempts) + " draws, max |c_m| = " + num(largest);
        return c;
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
