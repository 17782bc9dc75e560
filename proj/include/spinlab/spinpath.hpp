#pragma once

// Spinning path as predictor-corrector continuation in a parameter slice.
//
// Along the path every datum except the spun critical point's torus position
// is frozen: the attractor multiplier, and the normalized Koenigs values of
// the non-spun critical points. The spun point's log-Koenigs value is driven
// along the core direction, log Phi(c_spun) = base_log + t mu (mod 2 pi i).

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/koenigs.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/torusgeom.hpp"

namespace spinlab {

using CVector = std::vector<cplx>;

/// Orbit budget for Koenigs evaluations on the path: near a parabolic limit
/// the spun orbit lingers ~t steps by the colliding fixed pair.
inline constexpr int kPathOrbitBudget = 2'000'000;

namespace linalg {

/// Row-major dense complex matrix.
struct CMatrix {
    std::size_t n = 0;
    std::vector<cplx> data;

    explicit CMatrix(std::size_t size = 0) : n(size), data(size * size, cplx{0.0, 0.0}) {}
    cplx& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
    cplx operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

/// Gaussian elimination with partial pivoting; throws on a singular system.
inline CVector solve(CMatrix a, CVector b)
{
    const std::size_t n = a.n;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col)))
                piv = r;
        if (a(piv, col) == cplx{0.0, 0.0})
            throw Error(ErrorCode::NoConvergence, "singular Jacobian");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const cplx f = a(r, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j)
                a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    CVector x(n);
    for (std::size_t i = n; i-- > 0;) {
        cplx s = b[i];
        for (std::size_t j = i + 1; j < n; ++j)
            s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

inline double norm_inf(std::span<const cplx> v)
{
    double m = 0.0;
    for (const cplx& x : v)
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace linalg

/// Result of an algebraic refinement of a landing parameter.
struct LandingRefinement {
    CVector coordinates;
    cplx point;       // parabolic point, or the fixed point hit by f^r(c_spun)
    cplx multiplier;  // multiplier of `point`
    double residual = 0.0;
};

/// A one-dimensional slice through a space of marked polynomials in which
/// the spinning path is the solution curve of residual(x, t) = 0.
class SpinProblem {
public:
    virtual ~SpinProblem() = default;

    virtual std::size_t dimension() const = 0;
    virtual MarkedPolynomial map_at(std::span<const cplx> x) const = 0;
    /// Label of the spun critical point.
    virtual std::string spun_label() const = 0;
    /// Index of the residual component that carries the spin target.
    virtual std::size_t spun_equation() const = 0;
    /// Normalized log-Koenigs value of the spun critical point (mod 2 pi i).
    virtual cplx achieved_log(std::span<const cplx> x) const = 0;
    virtual CVector residual(std::span<const cplx> x, double t) const = 0;
    /// d residual / dx. `scale` bounds finite-difference steps, when used.
    virtual linalg::CMatrix jacobian(std::span<const cplx> x, double t, double scale) const = 0;

    virtual std::optional<LandingRefinement> refine_parabolic(std::span<const cplx> x, cplx z_guess) const = 0;
    virtual std::optional<LandingRefinement> refine_misiurewicz(std::span<const cplx> x, cplx z_guess, int r) const = 0;

    const AnnulusSpec& annulus() const noexcept { return spec_; }
    const LogLattice& lattice() const noexcept { return lattice_; }

protected:
    AnnulusSpec spec_{};
    LogLattice lattice_{};
};

/// Cubic slice f(c, z) = z/2 + a(c) z^2 - z^3/3: the attractor 0 keeps
/// multiplier 1/2 identically, b is normalized to -1 and c is spun.
class CubicSliceProblem final : public SpinProblem {
public:
    /// Annulus through the spun critical point of f(c_start, .).
    CubicSliceProblem(cplx c_start, int twist, double half_width = 0.0)
    {
        lattice_ = make_lattice(0.5);
        spec_ = make_annulus(raw_log(c_start), twist, lattice_, half_width);
    }

    CubicSliceProblem(AnnulusSpec spec, LogLattice lattice)
    {
        spec_ = spec;
        lattice_ = lattice;
    }

    std::size_t dimension() const override { return 1; }
    MarkedPolynomial map_at(std::span<const cplx> x) const override { return make_cubic(x[0]); }
    std::string spun_label() const override { return "c"; }
    std::size_t spun_equation() const override { return 0; }

    cplx achieved_log(std::span<const cplx> x) const override { return raw_log(x[0]); }

    CVector residual(std::span<const cplx> x, double t) const override
    {
        return {wrap_log(raw_log(x[0]) - spin_target_log(spec_, lattice_, t))};
    }

    linalg::CMatrix jacobian(std::span<const cplx> x, double, double) const override
    {
        linalg::CMatrix j(1);
        j(0, 0) = log_derivative(x[0]);
        return j;
    }

    /// d log Phi(c) / dc by forward-mode differentiation along both critical orbits.
    static cplx log_derivative(cplx c)
    {
        const auto map = make_cubic(c);
        const auto chart = make_chart(map, 0.0);
        const auto orbit_term = [&](cplx z, cplx dz) {
            int steps = 0;
            while (std::abs(z) >= chart.local_radius) {
                if (++steps > kPathOrbitBudget || !(std::abs(z) <= chart.escape_radius))
                    throw Error(ErrorCode::NotInBasin, "critical orbit left the basin");
                std::tie(z, dz) = cubic::orbit_with_dc(c, z, dz, 1);
            }
            // Inside the disk psi ~ lambda^-N z_N up to O(|z_N|); push z_N to 1e-13.
            const double floor = 1e-13 * chart.local_radius;
            while (std::abs(z) > floor && z != cplx{0.0, 0.0})
                std::tie(z, dz) = cubic::orbit_with_dc(c, z, dz, 1);
            if (z == cplx{0.0, 0.0})
                throw Error(ErrorCode::MarkedCritAtAttractor, "critical orbit hits the attractor");
            return dz / z;
        };
        return orbit_term(c, 1.0) - orbit_term(cubic::b_of(c), cubic::db_dc(c));
    }

    std::optional<LandingRefinement> refine_parabolic(std::span<const cplx> x, cplx z_guess) const override
    {
        try {
            const auto sol = solve_parabolic(x[0], z_guess);
            return LandingRefinement{{sol.c}, sol.z, cubic::dz(sol.c, sol.z),
                                     std::max(sol.fixed_residual, sol.multiplier_residual)};
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    std::optional<LandingRefinement> refine_misiurewicz(std::span<const cplx> x, cplx z_guess, int r) const override
    {
        try {
            const auto sol = solve_misiurewicz(x[0], z_guess, r);
            return LandingRefinement{{sol.c}, sol.z, sol.multiplier, std::max(sol.fixed_residual, sol.landing_residual)};
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    /// Normalized log-Koenigs value of c in f(c, .), b sent to -1.
    static cplx raw_log(cplx c)
    {
        const auto map = make_cubic(c);
        const auto chart = make_chart(map, 0.0);
        const auto lc = koenigs_log(chart, map, c, 1e-15, kPathOrbitBudget).log_value;
        const auto lb = koenigs_log(chart, map, cubic::b_of(c), 1e-15, kPathOrbitBudget).log_value;
        if (!(lb.real() > std::log(1e-12 * chart.local_radius)))
            throw Error(ErrorCode::MarkedCritAtAttractor, "critical point 'b' has psi = 0");
        return wrap_log(lc - lb + cplx{0.0, std::numbers::pi});
    }

};

/// Monic polynomials d \int_0^z prod (zeta - c_m)^{d_m}: the attractor is the
/// origin, its multiplier is held at its starting value, one critical point
/// is normalized to -1, the others except the spun one keep their Koenigs
/// values. Jacobians by central differences.
class MonicSliceProblem final : public SpinProblem {
public:
    MonicSliceProblem(CVector critical_start, std::vector<int> multiplicities, std::size_t marked, std::size_t spun,
                      int twist, double half_width = 0.0)
        : mult_(std::move(multiplicities)), marked_(marked), spun_(spun)
    {
        const std::size_t m = critical_start.size();
        if (m < 2 || mult_.size() != m || marked >= m || spun >= m || marked == spun)
            throw Error(ErrorCode::InvalidArgument, "monic slice needs distinct marked and spun critical points");
        const auto map = make_monic(critical_start, mult_);
        multiplier_ = map.derivative(0.0);
        lattice_ = make_lattice(multiplier_);
        const auto logs = logs_at(critical_start);
        frozen_ = logs;
        spec_ = make_annulus(logs[spun_], twist, lattice_, half_width);
    }

    std::size_t dimension() const override { return mult_.size(); }
    MarkedPolynomial map_at(std::span<const cplx> x) const override { return make_monic(x, mult_); }
    std::string spun_label() const override { return "c" + std::to_string(spun_ + 1); }
    std::size_t spun_equation() const override { return spun_; }
    cplx achieved_log(std::span<const cplx> x) const override { return logs_at(x)[spun_]; }
    cplx multiplier() const noexcept { return multiplier_; }

    CVector residual(std::span<const cplx> x, double t) const override
    {
        const auto logs = logs_at(x);
        const auto map = make_monic(x, mult_);
        CVector r(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == marked_)
                r[j] = map.derivative(0.0) - multiplier_;
            else if (j == spun_)
                r[j] = wrap_log(logs[j] - spin_target_log(spec_, lattice_, t));
            else
                r[j] = wrap_log(logs[j] - frozen_[j]);
        }
        return r;
    }

    /// Forward-mode derivative of each Koenigs log along its critical orbit;
    /// the attractor stays at 0, so log psi = log z_n - n log lambda + O(z_n).
    linalg::CMatrix jacobian(std::span<const cplx> x, double, double) const override
    {
        const std::size_t n = x.size();
        const auto map = make_monic(x, mult_);
        const auto dcoeffs = coefficient_gradient(x);
        const cplx lambda = map.derivative(0.0);
        const double r0 = make_chart(map, 0.0).local_radius;
        const double escape = detail::orbit_escape_radius(map);

        std::vector<CVector> grad(n, CVector(n, cplx{0.0, 0.0}));
        for (std::size_t j = 0; j < n; ++j) {
            cplx z = x[j];
            CVector dz(n, cplx{0.0, 0.0});
            dz[j] = 1.0;
            long steps = 0;
            while (std::abs(z) >= 1e-11 * r0) {
                if (steps >= kPathOrbitBudget || !(std::abs(z) <= escape))
                    throw Error(ErrorCode::NotInBasin, "critical orbit left the basin");
                const cplx fp = map.derivative(z);
                for (std::size_t k = 0; k < n; ++k)
                    dz[k] = fp * dz[k] + poly::eval(dcoeffs[k], z);
                z = map(z);
                ++steps;
            }
            if (z == cplx{0.0, 0.0})
                throw Error(ErrorCode::MarkedCritAtAttractor, "critical orbit hits the attractor");
            for (std::size_t k = 0; k < n; ++k)
                grad[j][k] = dz[k] / z - static_cast<double>(steps) * dcoeffs[k][1] / lambda;
        }

        linalg::CMatrix jac(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                jac(i, k) = i == marked_ ? dcoeffs[k][1] : grad[i][k] - grad[marked_][k];
        return jac;
    }

    /// Newton on {Lambda = lambda_0, frozen Koenigs values, f(z) = z, f'(z) = 1}
    /// with the spun equation dropped and z appended.
    std::optional<LandingRefinement> refine_parabolic(std::span<const cplx> x, cplx z_guess) const override
    {
        return refine(x, z_guess, [](const MarkedPolynomial& map, cplx z, std::span<const cplx>) {
            return std::pair{map(z) - z, map.derivative(z) - 1.0};
        });
    }

    std::optional<LandingRefinement> refine_misiurewicz(std::span<const cplx> x, cplx z_guess, int r) const override
    {
        const std::size_t spun = spun_;
        return refine(x, z_guess, [r, spun](const MarkedPolynomial& map, cplx z, std::span<const cplx> xs) {
            cplx w = xs[spun];
            for (int k = 0; k < r; ++k)
                w = map(w);
            return std::pair{map(z) - z, w - z};
        });
    }

private:
    /// d(coefficients)/d(critical point k) for f = integral of d * prod (z - c_m)^{d_m}.
    std::vector<std::vector<cplx>> coefficient_gradient(std::span<const cplx> x) const
    {
        const double d = static_cast<double>(std::accumulate(mult_.begin(), mult_.end(), 0) + 1);
        std::vector<std::vector<cplx>> out;
        for (std::size_t k = 0; k < x.size(); ++k) {
            std::vector<cplx> prod{-static_cast<double>(mult_[k])};
            for (std::size_t m = 0; m < x.size(); ++m)
                for (int e = 0; e < mult_[m] - (m == k ? 1 : 0); ++e)
                    prod = poly::multiply(prod, std::vector<cplx>{-x[m], 1.0});
            std::vector<cplx> coeffs(prod.size() + 1, cplx{0.0, 0.0});
            for (std::size_t i = 0; i < prod.size(); ++i)
                coeffs[i + 1] = d * prod[i] / static_cast<double>(i + 1);
            out.push_back(std::move(coeffs));
        }
        return out;
    }

    CVector logs_at(std::span<const cplx> x) const
    {
        const auto map = make_monic(x, mult_);
        const auto chart = with_marked_normalization(make_chart(map, 0.0), map, "c" + std::to_string(marked_ + 1));
        CVector out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j)
            out[j] = j == marked_ ? cplx{0.0, std::numbers::pi}
                                  : wrap_log(koenigs_log(chart, map, x[j], 1e-15, kPathOrbitBudget).log_value
                                             - chart.marked_log + cplx{0.0, std::numbers::pi});
        return out;
    }

    template <class Landing>
    std::optional<LandingRefinement> refine(std::span<const cplx> x, cplx z_guess, Landing landing) const
    {
        const std::size_t n = x.size();
        CVector v(x.begin(), x.end());
        v.push_back(z_guess);
        const auto eval = [&](const CVector& vv) {
            const std::span<const cplx> xs(vv.data(), n);
            const auto map = make_monic(xs, mult_);
            CVector r;
            CVector logs;
            bool need_logs = false;
            for (std::size_t j = 0; j < n; ++j)
                need_logs |= (j != marked_ && j != spun_);
            if (need_logs)
                logs = logs_at(xs);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == marked_)
                    r.push_back(map.derivative(0.0) - multiplier_);
                else if (j != spun_)
                    r.push_back(wrap_log(logs[j] - frozen_[j]));
            }
            const auto [e1, e2] = landing(map, vv[n], xs);
            r.push_back(e1);
            r.push_back(e2);
            return r;
        };
        try {
            for (int it = 0; it < 40; ++it) {
                const auto r = eval(v);
                if (linalg::norm_inf(r) < 1e-13)
                    break;
                linalg::CMatrix jac(n + 1);
                for (std::size_t k = 0; k <= n; ++k) {
                    const double h = 1e-7 * std::max(1.0, std::abs(v[k]));
                    CVector vp = v, vm = v;
                    vp[k] += h;
                    vm[k] -= h;
                    const auto rp = eval(vp), rm = eval(vm);
                    for (std::size_t i = 0; i <= n; ++i)
                        jac(i, k) = (rp[i] - rm[i]) / (2.0 * h);
                }
                const auto dv = linalg::solve(jac, r);
                for (std::size_t k = 0; k <= n; ++k)
                    v[k] -= dv[k];
                if (linalg::norm_inf(dv) < 1e-15)
                    break;
            }
            const auto r = eval(v);
            const auto map = make_monic(std::span<const cplx>(v.data(), n), mult_);
            return LandingRefinement{CVector(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)), v[n],
                                     map.derivative(v[n]), linalg::norm_inf(r)};
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    std::vector<int> mult_;
    std::size_t marked_;
    std::size_t spun_;
    cplx multiplier_;
    CVector frozen_;
};

struct TraceConfig {
    double t_step_init = 0.25;
    double t_step_min = 1e-6;
    double t_step_max = 1e5;
    /// Corrector tolerance in strip units (|residual| / |mu|), scaled by max(1, t).
    double corrector_tol = 1e-10;
    int newton_max_iter = 30;
    double divergence_radius = 100.0;
    double max_t = 1e6;
    /// r from the visibility classification of the spun critical point.
    int visible_after = 0;
    double landing_multiplier_tol = 1e-3;
    double landing_distance_tol = 1e-3;
    double contraction_ratio = 0.9;
    /// Consecutive states that must meet a landing criterion before refinement.
    int landing_confirmations = 3;
    std::size_t max_states = 20000;
};

struct SpinState {
    double t = 0.0;
    /// Location of the spun critical point (the slice parameter c for the cubic slice).
    cplx parameter;
    CVector coordinates;
    /// Normalized log-Koenigs value of the spun critical point, on the target's sheet.
    cplx achieved_log;
    cplx target_log;
    double newton_residual = 0.0;
    /// d achieved_log / d parameter.
    cplx jacobian_estimate;
    // Tracked fixed-point pair and its multipliers.
    cplx u_plus, u_minus;
    cplx lambda_plus, lambda_minus;
    /// Distance from f^r(c_spun) to the nearest repelling fixed point (r >= 1 only).
    double landing_distance = 0.0;
    int newton_iterations = 0;
};

enum class OutcomeKind { Landed, Diverged, Aborted };
enum class LimitClass { None, ParabolicCreation, MisiurewiczLanding, Diverged, Unclassified };
enum class AbortReason { None, StepUnderflow, BasinLoss, BudgetExhausted };

inline constexpr std::string_view to_string(OutcomeKind k)
{
    switch (k) {
    case OutcomeKind::Landed: return "Landed";
    case OutcomeKind::Diverged: return "Diverged";
    case OutcomeKind::Aborted: return "Aborted";
    }
    return "?";
}

inline constexpr std::string_view to_string(LimitClass k)
{
    switch (k) {
    case LimitClass::None: return "None";
    case LimitClass::ParabolicCreation: return "ParabolicCreation";
    case LimitClass::MisiurewiczLanding: return "MisiurewiczLanding";
    case LimitClass::Diverged: return "Diverged";
    case LimitClass::Unclassified: return "Unclassified";
    }
    return "?";
}

inline constexpr std::string_view to_string(AbortReason k)
{
    switch (k) {
    case AbortReason::None: return "None";
    case AbortReason::StepUnderflow: return "StepUnderflow";
    case AbortReason::BasinLoss: return "BasinLoss";
    case AbortReason::BudgetExhausted: return "BudgetExhausted";
    }
    return "?";
}

struct TraceOutcome {
    OutcomeKind kind = OutcomeKind::Aborted;
    LimitClass limit_class = LimitClass::None;
    int misiurewicz_steps = 0;
    cplx parameter_limit;
    CVector coordinates_limit;
    /// Parabolic point, or the repelling fixed point hit by f^r(c_spun).
    std::optional<cplx> special_point;
    std::optional<cplx> special_multiplier;
    double refinement_residual = 0.0;
    AbortReason abort_reason = AbortReason::None;
    std::string message;
};

struct SpinTrace {
    std::vector<SpinState> states;
    TraceOutcome outcome;
};

struct LandingVerdict {
    LimitClass kind = LimitClass::None;
    int steps = 0;
    double ratio = 1.0;
    /// Geometric-series extrapolation of the coordinates.
    CVector extrapolated;
};

/// Landing criteria on the accepted states. Needs at least 10 states.
inline LandingVerdict detect_landing(std::span<const SpinState> states, const TraceConfig& config)
{
    LandingVerdict v;
    if (states.empty())
        return v;
    const auto& last = states.back();
    const double r_div = config.divergence_radius;
    if (std::abs(last.parameter) > r_div || std::abs(last.parameter) < 1.0 / r_div) {
        v.kind = LimitClass::Diverged;
        return v;
    }
    if (states.size() < 10)
        return v;

    const std::size_t n = states.size();
    const auto increment = [&](std::size_t k) {
        double d = 0.0;
        for (std::size_t i = 0; i < states[k].coordinates.size(); ++i)
            d = std::max(d, std::abs(states[k].coordinates[i] - states[k - 1].coordinates[i]));
        return d;
    };
    const double d2 = increment(n - 1), d1 = increment(n - 2), d0 = increment(n - 3);
    if (!(d1 > 0.0) || !(d0 > 0.0))
        return v;
    const double rho = d2 / d1;
    const bool geometric = rho < config.contraction_ratio && d1 / d0 < config.contraction_ratio;
    v.ratio = rho;

    const auto near_one = [&](const SpinState& s) {
        return std::max(std::abs(s.lambda_plus - 1.0), std::abs(s.lambda_minus - 1.0));
    };
    const bool parabolic = geometric && near_one(last) < config.landing_multiplier_tol
                           && near_one(last) < near_one(states[n - 2]);
    const bool misiurewicz = geometric && config.visible_after >= 1
                             && last.landing_distance < config.landing_distance_tol
                             && last.landing_distance < states[n - 2].landing_distance;

    if (parabolic || misiurewicz) {
        v.extrapolated = last.coordinates;
        for (std::size_t i = 0; i < v.extrapolated.size(); ++i)
            v.extrapolated[i] += (last.coordinates[i] - states[n - 2].coordinates[i]) * (rho / (1.0 - rho));
    }
    if (parabolic && misiurewicz)
        v.kind = LimitClass::Unclassified;
    else if (parabolic)
        v.kind = config.visible_after == 0 ? LimitClass::ParabolicCreation : LimitClass::Unclassified;
    else if (misiurewicz)
        v.kind = LimitClass::MisiurewiczLanding;
    v.steps = config.visible_after;
    return v;
}

namespace detail {

struct CorrectorResult {
    bool converged = false;
    bool basin_lost = false;
    CVector x;
    CVector r;
    int iterations = 0;
};

inline bool is_basin_error(const Error& e)
{
    return e.code() == ErrorCode::NotInBasin || e.code() == ErrorCode::MarkedCritAtAttractor
           || e.code() == ErrorCode::NoConvergence || e.code() == ErrorCode::DegenerateParameter;
}

} // namespace detail

/// Damped Newton at fixed t: Armijo halving (at most 8) on basin loss or
/// insufficient decrease.
inline detail::CorrectorResult correct(const SpinProblem& problem, CVector x, double t, const TraceConfig& config,
                                       double fd_scale = 1e-6)
{
    detail::CorrectorResult out;
    const double mu_abs = std::abs(core_direction(problem.annulus(), problem.lattice()));
    // Koenigs sums along orbits of length ~t lose digits in proportion to t.
    const double tol = config.corrector_tol * mu_abs * std::max(1.0, t);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    CVector r;
    try {
        r = problem.residual(x, t);
    } catch (const Error& e) {
        if (!detail::is_basin_error(e))
            throw;
        out.basin_lost = true;
        return out;
    }
    bool stalled = false;
    for (int it = 0; it <= config.newton_max_iter; ++it) {
        out.iterations = it;
        // A full step at the rounding level of x means x is as good as it gets.
        if (linalg::norm_inf(r) < tol || stalled) {
            out.converged = true;
            out.x = std::move(x);
            out.r = std::move(r);
            return out;
        }
        if (it == config.newton_max_iter)
            break;
        CVector dx;
        try {
            dx = linalg::solve(problem.jacobian(x, t, fd_scale), r);
        } catch (const Error& e) {
            if (!detail::is_basin_error(e))
                throw;
            out.basin_lost = true;
            return out;
        }
        double alpha = 1.0;
        bool accepted = false;
        const double r_norm = linalg::norm_inf(r);
        for (int h = 0; h <= 8; ++h, alpha *= 0.5) {
            CVector xt = x;
            for (std::size_t i = 0; i < x.size(); ++i)
                xt[i] -= alpha * dx[i];
            try {
                auto rt = problem.residual(xt, t);
                if (linalg::norm_inf(rt) < (1.0 - 1e-4 * alpha) * r_norm) {
                    stalled = alpha == 1.0 && linalg::norm_inf(dx) <= 8.0 * eps * std::max(1.0, linalg::norm_inf(x))
                              && linalg::norm_inf(rt) < 1e3 * tol;
                    x = std::move(xt);
                    r = std::move(rt);
                    accepted = true;
                    break;
                }
            } catch (const Error& e) {
                if (!detail::is_basin_error(e))
                    throw;
                out.basin_lost = true;
            }
        }
        if (!accepted)
            return out;
    }
    return out;
}

namespace detail {

inline std::pair<cplx, cplx> initial_pair(const MarkedPolynomial& map, cplx attractor)
{
    std::vector<cplx> others;
    for (const auto& fp : fixed_points(map))
        if (std::abs(fp.location - attractor) > 1e-9)
            others.push_back(fp.location);
    if (others.empty())
        return {attractor, attractor};
    const auto by_imag = [](cplx p, cplx q) { return p.imag() < q.imag(); };
    return {*std::max_element(others.begin(), others.end(), by_imag),
            *std::min_element(others.begin(), others.end(), by_imag)};
}

inline void annotate(SpinState& s, const SpinProblem& problem, const TraceConfig& config, cplx prev_plus,
                     cplx prev_minus)
{
    const auto map = problem.map_at(s.coordinates);
    const auto fps = fixed_points(map);
    const auto nearest = [&](cplx target) {
        const FixedPointRecord* best = &fps.front();
        for (const auto& fp : fps)
            if (std::abs(fp.location - target) < std::abs(best->location - target))
                best = &fp;
        return *best;
    };
    const auto up = nearest(prev_plus);
    const auto um = nearest(prev_minus);
    s.u_plus = up.location;
    s.lambda_plus = up.multiplier;
    s.u_minus = um.location;
    s.lambda_minus = um.multiplier;
    // A merged pair is split again by the two raw roots when they are distinct.
    if (up.multiplicity > 1 || um.multiplicity > 1)
        s.u_plus = s.u_minus = up.multiplicity > 1 ? up.location : um.location;
    if (config.visible_after >= 1) {
        cplx w = map.critical_point(problem.spun_label()).location;
        for (int k = 0; k < config.visible_after; ++k)
            w = map(w);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& fp : fps)
            if (fp.classification == FixedPointClass::Repelling)
                best = std::min(best, std::abs(w - fp.location));
        s.landing_distance = best;
    }
}

} // namespace detail

/// Traces the spinning path from `x_start` (which must satisfy residual = 0
/// at t = 0) until it lands, diverges or runs out of budget.
inline SpinTrace trace(const SpinProblem& problem, const TraceConfig& config, CVector x_start,
                       std::optional<std::pair<cplx, cplx>> pair = std::nullopt)
{
    if (!(config.t_step_min > 0.0 && config.t_step_min <= config.t_step_init && config.t_step_init <= config.t_step_max))
        throw Error(ErrorCode::InvalidArgument, "need 0 < t_step_min <= t_step_init <= t_step_max");
    if (!(config.corrector_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "corrector_tol must be positive");

    SpinTrace tr;
    const std::size_t spun_eq = problem.spun_equation();
    const cplx mu = core_direction(problem.annulus(), problem.lattice());

    const auto make_state = [&](const detail::CorrectorResult& c, double t, cplx prev_plus, cplx prev_minus,
                                double fd_scale) {
        SpinState s;
        s.t = t;
        s.coordinates = c.x;
        s.parameter = c.x[spun_eq];
        s.target_log = spin_target_log(problem.annulus(), problem.lattice(), t);
        s.achieved_log = s.target_log + c.r[spun_eq];
        s.newton_residual = linalg::norm_inf(c.r);
        s.newton_iterations = c.iterations;
        s.jacobian_estimate = problem.jacobian(c.x, t, fd_scale)(spun_eq, spun_eq);
        detail::annotate(s, problem, config, prev_plus, prev_minus);
        return s;
    };

    auto first = correct(problem, x_start, 0.0, config);
    if (!first.converged)
        throw Error(ErrorCode::InvalidArgument, "starting point does not satisfy the slice equations at t = 0");
    const auto start_map = problem.map_at(first.x);
    const auto [p0, m0] = pair ? *pair : detail::initial_pair(start_map, 0.0);
    tr.states.push_back(make_state(first, 0.0, p0, m0, 1e-6));

    double h = config.t_step_init;
    int successes = 0;
    LimitClass last_kind = LimitClass::None;
    int streak = 0;
    bool last_failure_basin = false;

    while (true) {
        const SpinState& cur = tr.states.back();
        if (cur.t >= config.max_t) {
            tr.outcome.kind = OutcomeKind::Aborted;
            tr.outcome.abort_reason = AbortReason::BudgetExhausted;
            tr.outcome.message = "reached max_t without landing";
            break;
        }
        if (tr.states.size() >= config.max_states) {
            tr.outcome.kind = OutcomeKind::Aborted;
            tr.outcome.abort_reason = AbortReason::BudgetExhausted;
            tr.outcome.message = "state budget exhausted";
            break;
        }
        const double t_next = std::min(cur.t + h, config.max_t);
        const double dt = t_next - cur.t;

        // Tangent predictor: J dx/dt = mu on the spun equation, zero elsewhere.
        const double scale = tr.states.size() >= 2
                                 ? std::max(1e-14, 1e-2 * std::abs(cur.parameter - tr.states[tr.states.size() - 2].parameter))
                                 : 1e-6;
        CVector rhs(cur.coordinates.size(), cplx{0.0, 0.0});
        rhs[spun_eq] = mu;
        CVector tangent(cur.coordinates.size(), cplx{0.0, 0.0});
        for (double js = scale; js > 1e-15; js *= 0.1) {
            try {
                tangent = linalg::solve(problem.jacobian(cur.coordinates, cur.t, js), rhs);
                break;
            } catch (const Error& e) {
                if (!detail::is_basin_error(e))
                    throw;
            }
        }
        CVector guess;
        double shrink = 1.0;
        for (int k = 0; k < 40; ++k, shrink *= 0.5) {
            guess = cur.coordinates;
            for (std::size_t i = 0; i < guess.size(); ++i)
                guess[i] += shrink * dt * tangent[i];
            try {
                (void)problem.residual(guess, t_next);
                break;
            } catch (const Error& e) {
                if (!detail::is_basin_error(e))
                    throw;
                guess = cur.coordinates;
            }
        }

        auto corrected = correct(problem, guess, t_next, config, scale);
        if (!corrected.converged) {
            last_failure_basin = corrected.basin_lost;
            h *= 0.5;
            successes = 0;
            if (h < config.t_step_min) {
                tr.outcome.kind = OutcomeKind::Aborted;
                tr.outcome.abort_reason = last_failure_basin ? AbortReason::BasinLoss : AbortReason::StepUnderflow;
                tr.outcome.message = "corrector failed below t_step_min at t = " + std::to_string(t_next);
                break;
            }
            continue;
        }

        const double moved = std::abs(corrected.x[spun_eq] - cur.parameter);
        tr.states.push_back(make_state(corrected, t_next, cur.u_plus, cur.u_minus,
                                       std::max(1e-14, std::min(scale, 1e-2 * moved))));
        const SpinState& fresh = tr.states.back();
        // Near a multiplier-one pair c(t) approaches its limit like 1/t^2: doubling
        // t at every step makes the increments contract by a fixed ratio.
        const bool cusp = std::max(std::abs(fresh.lambda_plus - 1.0), std::abs(fresh.lambda_minus - 1.0))
                          < 10.0 * config.landing_multiplier_tol;
        if (cusp) {
            h = std::min(std::max(h, fresh.t), config.t_step_max);
            successes = 0;
        } else if (++successes >= 3) {
            h = std::min(2.0 * h, config.t_step_max);
            successes = 0;
        }

        const auto verdict = detect_landing(tr.states, config);
        const SpinState& last = tr.states.back();
        if (verdict.kind == LimitClass::Diverged) {
            tr.outcome.kind = OutcomeKind::Diverged;
            tr.outcome.limit_class = LimitClass::Diverged;
            tr.outcome.parameter_limit = last.parameter;
            tr.outcome.message = "parameter left the divergence radius";
            break;
        }
        if (verdict.kind == last_kind)
            ++streak;
        else
            streak = 1;
        last_kind = verdict.kind;
        if ((verdict.kind == LimitClass::ParabolicCreation || verdict.kind == LimitClass::MisiurewiczLanding)
            && streak >= config.landing_confirmations) {
            const bool parabolic = verdict.kind == LimitClass::ParabolicCreation;
            cplx z_guess = 0.5 * (last.u_plus + last.u_minus);
            if (!parabolic) {
                // f^r of the spun point already sits within the landing tolerance.
                const auto map = problem.map_at(last.coordinates);
                z_guess = last.parameter;
                for (int k = 0; k < verdict.steps; ++k)
                    z_guess = map(z_guess);
            }
            const auto refined = parabolic ? problem.refine_parabolic(verdict.extrapolated, z_guess)
                                           : problem.refine_misiurewicz(verdict.extrapolated, z_guess, verdict.steps);
            const double spread = std::abs(last.parameter - tr.states[tr.states.size() - 2].parameter);
            if (refined && refined->residual < 1e-10
                && std::abs(refined->coordinates[spun_eq] - last.parameter) <= 10.0 * spread) {
                tr.outcome.kind = OutcomeKind::Landed;
                tr.outcome.limit_class = verdict.kind;
                tr.outcome.misiurewicz_steps = parabolic ? 0 : verdict.steps;
                tr.outcome.coordinates_limit = refined->coordinates;
                tr.outcome.parameter_limit = refined->coordinates[spun_eq];
                tr.outcome.special_point = refined->point;
                tr.outcome.special_multiplier = refined->multiplier;
                tr.outcome.refinement_residual = refined->residual;
                break;
            }
        }
        if (verdict.kind == LimitClass::Unclassified) {
            if (streak >= 5) {
                tr.outcome.kind = OutcomeKind::Landed;
                tr.outcome.limit_class = LimitClass::Unclassified;
                tr.outcome.coordinates_limit = verdict.extrapolated;
                tr.outcome.parameter_limit = verdict.extrapolated[spun_eq];
                tr.outcome.message = "landing criteria conflict";
                break;
            }
        }
    }
    return tr;
}

/// Coordinates on the path at time t, continued from the last accepted state
/// at or before t in sub-steps no longer than `max_step`.
inline CVector state_at(const SpinProblem& problem, const SpinTrace& trace, double t, const TraceConfig& config,
                        double max_step = 0.25)
{
    if (trace.states.empty() || t < trace.states.front().t)
        throw Error(ErrorCode::InvalidArgument, "time precedes the trace");
    const SpinState* from = &trace.states.front();
    for (const auto& s : trace.states)
        if (s.t <= t)
            from = &s;
    CVector x = from->coordinates;
    double tc = from->t;
    double h = std::min(max_step, t - tc);
    while (tc < t) {
        const double tn = std::min(t, tc + h);
        auto c = correct(problem, x, tn, config);
        if (!c.converged) {
            h *= 0.5;
            if (h < config.t_step_min)
                throw Error(ErrorCode::NoConvergence, "continuation to t = " + std::to_string(t) + " failed");
            continue;
        }
        x = std::move(c.x);
        tc = tn;
    }
    return x;
}

/// Slice residual of the cubic family: wrapped log Phi(c) - (base_log + t mu).
inline cplx residual(cplx c, double t, const AnnulusSpec& spec, const LogLattice& lattice)
{
    return CubicSliceProblem(spec, lattice).residual(CVector{c}, t)[0];
}

} // namespace spinlab
