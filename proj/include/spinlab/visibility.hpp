#pragma once

// Raster visibility. Gamma is the set of basin points whose Koenigs value
// lies on the lifted boundary of the annulus, |across| = 2l in strip
// coordinates; components of basin - Gamma are labelled by flood fill and a
// point is visible when its component reaches the attractor.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/koenigs.hpp"
#include "spinlab/parallel.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/torusgeom.hpp"

namespace spinlab {

struct GridSpec {
    cplx center{0.0, 0.0};
    double half_width_x = 2.0;
    double half_width_y = 2.0;
    int resolution = 512;
    /// Half-thickness of the Gamma band, strip units.
    double gamma_band_eps = 0.08;
    int orbit_budget = kDefaultOrbitBudget;
};

/// Square window centred on the attractor that holds the whole filled Julia set.
inline GridSpec default_grid(const LinearizationChart& chart, int resolution = 512, double gamma_band_eps = 0.08)
{
    GridSpec g;
    g.center = 0.0;
    g.half_width_x = g.half_width_y = chart.escape_radius;
    g.resolution = resolution;
    g.gamma_band_eps = gamma_band_eps;
    return g;
}

struct GridMasks {
    GridSpec grid;
    AnnulusSpec annulus;
    LogLattice lattice;
    LinearizationChart chart;
    MarkedPolynomial map;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> basin;
    std::vector<std::uint8_t> gamma;
    /// 0..adjacent_count-1 reach the attractor; -1 on gamma and off the basin.
    std::vector<std::int32_t> labels;
    /// Strip `across` coordinate; NaN off the basin.
    std::vector<float> across;
    int adjacent_count = 0;
    int component_count = 0;

    std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }

    double pixel_size_x() const { return 2.0 * grid.half_width_x / width; }
    double pixel_size_y() const { return 2.0 * grid.half_width_y / height; }

    /// Centre of pixel (row, col); row 0 is the top edge.
    cplx point(int row, int col) const
    {
        return grid.center + cplx{-grid.half_width_x + (col + 0.5) * pixel_size_x(),
                                  grid.half_width_y - (row + 0.5) * pixel_size_y()};
    }

    std::optional<std::pair<int, int>> pixel(cplx z) const
    {
        const cplx d = z - grid.center;
        const double col = std::floor((d.real() + grid.half_width_x) / pixel_size_x());
        const double row = std::floor((grid.half_width_y - d.imag()) / pixel_size_y());
        if (!(col >= 0.0 && col < width && row >= 0.0 && row < height))
            return std::nullopt;
        return std::pair{static_cast<int>(row), static_cast<int>(col)};
    }

    bool adjacent(std::int32_t label) const { return label >= 0 && label < adjacent_count; }
};

namespace detail {

inline void validate(const GridSpec& grid, const AnnulusSpec& annulus)
{
    if (grid.resolution < 64)
        throw Error(ErrorCode::InvalidArgument, "grid resolution must be at least 64");
    if (!(grid.half_width_x > 0.0 && grid.half_width_y > 0.0))
        throw Error(ErrorCode::InvalidArgument, "grid half-widths must be positive");
    if (!(grid.gamma_band_eps > 0.0 && grid.gamma_band_eps < annulus.half_width))
        throw Error(ErrorCode::InvalidArgument, "gamma_band_eps must lie in (0, l)");
}

/// Flood fill of basin - gamma with 4-connectivity; components meeting the
/// disk |z - a| < r0/2 are numbered first.
inline void label_components(GridMasks& m)
{
    const int w = m.width, h = m.height;
    std::vector<std::int32_t> raw(m.basin.size(), -1);
    std::vector<bool> touches;
    std::queue<std::pair<int, int>> q;
    const double disk = 0.5 * m.chart.local_radius;
    std::int32_t next = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const auto i0 = m.index(r, c);
            if (!m.basin[i0] || m.gamma[i0] || raw[i0] >= 0)
                continue;
            bool reach = false;
            raw[i0] = next;
            q.emplace(r, c);
            while (!q.empty()) {
                const auto [pr, pc] = q.front();
                q.pop();
                reach = reach || std::abs(m.point(pr, pc) - m.chart.attractor) < disk;
                constexpr int dr[4] = {-1, 1, 0, 0};
                constexpr int dc[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = pr + dr[k], nc = pc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w)
                        continue;
                    const auto j = m.index(nr, nc);
                    if (m.basin[j] && !m.gamma[j] && raw[j] < 0) {
                        raw[j] = next;
                        q.emplace(nr, nc);
                    }
                }
            }
            touches.push_back(reach);
            ++next;
        }
    std::vector<std::int32_t> remap(touches.size());
    std::int32_t k = 0;
    for (std::size_t i = 0; i < touches.size(); ++i)
        if (touches[i])
            remap[i] = k++;
    m.adjacent_count = k;
    for (std::size_t i = 0; i < touches.size(); ++i)
        if (!touches[i])
            remap[i] = k++;
    m.component_count = k;
    m.labels.assign(raw.size(), -1);
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i] >= 0)
            m.labels[i] = remap[static_cast<std::size_t>(raw[i])];
}

} // namespace detail

/// Rasterizes basin, Gamma and the component labels. `chart` must carry the
/// marked normalization that `annulus.base_log` was measured in.
inline GridMasks build_masks(const MarkedPolynomial& map, const LinearizationChart& chart, const AnnulusSpec& annulus,
                             const LogLattice& lattice, const GridSpec& grid)
{
    detail::validate(grid, annulus);
    const cplx mu = core_direction(annulus, lattice);
    // Near the attractor zeta ~ log(z)/mu, so a pixel at |z - a| = r0/2
    // spans this many strip units.
    const double pixel = std::max(2.0 * grid.half_width_x, 2.0 * grid.half_width_y) / grid.resolution;
    const double strip_pixel = pixel / (std::abs(mu) * 0.5 * chart.local_radius);
    if (2.0 * grid.gamma_band_eps < strip_pixel)
        throw Error(ErrorCode::ResolutionTooCoarse,
                    "gamma band of " + std::to_string(2.0 * grid.gamma_band_eps) + " strip units is thinner than a pixel ("
                        + std::to_string(strip_pixel) + ")");

    GridMasks m{grid, annulus, lattice, chart, map, 0, 0, {}, {}, {}, {}};
    m.width = m.height = grid.resolution;
    const std::size_t n = static_cast<std::size_t>(m.width) * m.height;
    m.basin.assign(n, 0);
    m.gamma.assign(n, 0);
    m.across.assign(n, std::numeric_limits<float>::quiet_NaN());

    const double two_l = 2.0 * annulus.half_width;
    const double eps = grid.gamma_band_eps;
    std::vector<double> across(n, std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(m.height), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        for (int c = 0; c < m.width; ++c) {
            const auto i = m.index(r, c);
            const cplx z = m.point(r, c);
            try {
                const auto lg = koenigs_log(chart, map, z, 1e-15, grid.orbit_budget);
                m.basin[i] = 1;
                const cplx nl = lg.log_value - chart.marked_log + cplx{0.0, std::numbers::pi};
                const double y = strip_coords_log(annulus, lattice, nl).across;
                across[i] = y;
                if (!std::isfinite(y) || std::abs(std::abs(y) - two_l) < eps)
                    m.gamma[i] = 1;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NotInBasin)
                    throw;
            }
        }
    });

    // A crossing of |y| = 2l between 4-neighbours closes the band even where
    // the Koenigs map stretches one pixel over more than 2 eps.
    const double period = transverse_period(annulus, lattice);
    const auto mark_crossing = [&](std::size_t i, std::size_t j) {
        if (!m.basin[i] || !m.basin[j] || m.gamma[i] || m.gamma[j])
            return;
        const double si = std::abs(across[i]) - two_l, sj = std::abs(across[j]) - two_l;
        if ((si < 0.0) == (sj < 0.0) || std::abs(across[i] - across[j]) > 0.25 * period)
            return;
        m.gamma[std::abs(si) <= std::abs(sj) ? i : j] = 2;
    };
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
            if (c + 1 < m.width)
                mark_crossing(m.index(r, c), m.index(r, c + 1));
            if (r + 1 < m.height)
                mark_crossing(m.index(r, c), m.index(r + 1, c));
        }
    for (std::size_t i = 0; i < n; ++i) {
        m.gamma[i] = m.gamma[i] ? 1 : 0;
        m.across[i] = static_cast<float>(across[i]);
    }
    detail::label_components(m);
    return m;
}

/// Component test for a single point.
inline bool visible(const GridMasks& masks, cplx z)
{
    const auto px = masks.pixel(z);
    if (!px)
        throw Error(ErrorCode::InvalidArgument, "point lies outside the raster window");
    const auto i = masks.index(px->first, px->second);
    if (!masks.basin[i])
        throw Error(ErrorCode::OutsideBasin, "point is not in the basin raster");
    if (masks.gamma[i])
        throw Error(ErrorCode::OnGamma, "point falls in the gamma band");
    return masks.adjacent(masks.labels[i]);
}

enum class VisibilityKind { Visible, VisibleAfter, NotVisibleWithinBudget, OutsideBasin };

struct VisibilityResult {
    VisibilityKind kind = VisibilityKind::NotVisibleWithinBudget;
    /// r for VisibleAfter; 0 for Visible.
    int steps = 0;

    bool operator==(const VisibilityResult&) const = default;
};

inline std::string to_string(const VisibilityResult& v)
{
    switch (v.kind) {
    case VisibilityKind::Visible: return "Visible";
    case VisibilityKind::VisibleAfter: return "VisibleAfter(" + std::to_string(v.steps) + ")";
    case VisibilityKind::NotVisibleWithinBudget: return "NotVisibleWithinBudget";
    case VisibilityKind::OutsideBasin: return "OutsideBasin";
    }
    return "?";
}

/// Smallest r <= budget with f^r(z) visible. A Gamma hit rebuilds the masks
/// once at double resolution; a second hit is an error.
inline VisibilityResult visibility_steps(const GridMasks& masks, cplx z, int budget = 16)
{
    try {
        (void)basin_entry(masks.map, masks.chart, z, masks.grid.orbit_budget);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotInBasin)
            throw;
        return {VisibilityKind::OutsideBasin, 0};
    }
    std::optional<GridMasks> refined;
    cplx w = z;
    for (int r = 0; r <= budget; ++r) {
        bool vis = false;
        try {
            vis = visible(refined ? *refined : masks, w);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OnGamma || refined)
                throw;
            GridSpec finer = masks.grid;
            finer.resolution *= 2;
            refined = build_masks(masks.map, masks.chart, masks.annulus, masks.lattice, finer);
            vis = visible(*refined, w);
        }
        if (vis)
            return r == 0 ? VisibilityResult{VisibilityKind::Visible, 0} : VisibilityResult{VisibilityKind::VisibleAfter, r};
        w = masks.map(w);
    }
    return {VisibilityKind::NotVisibleWithinBudget, 0};
}

struct VisibilityEntry {
    std::string label;
    cplx location;
    VisibilityResult result;
};

struct VisibilityReport {
    std::vector<VisibilityEntry> entries;

    const VisibilityEntry& at(const std::string& label) const
    {
        for (const auto& e : entries)
            if (e.label == label)
                return e;
        throw Error(ErrorCode::InvalidArgument, "no critical point labelled '" + label + "'");
    }
};

inline VisibilityReport classify_critical_points(const GridMasks& masks, int budget = 16)
{
    VisibilityReport rep;
    for (const auto& cp : masks.map.critical_points())
        rep.entries.push_back({cp.label, cp.location, visibility_steps(masks, cp.location, budget)});
    return rep;
}

/// Everything needed to classify the cubic f(c, .) with the annulus around c.
struct CubicVisibilitySetup {
    MarkedPolynomial map;
    LinearizationChart chart;
    AnnulusSpec annulus;
    LogLattice lattice;
};

/// Chart normalized at b, annulus of twist m through c. When b or c leaves
/// the basin the missing datum is replaced by the derivative-one chart and
/// base_log 0; such a setup only serves to report OutsideBasin.
inline CubicVisibilitySetup cubic_visibility_setup(cplx c, int twist, double half_width = 0.0)
{
    auto map = make_cubic(c);
    auto chart = make_chart(map, 0.0);
    try {
        chart = with_marked_normalization(chart, map, "b");
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotInBasin)
            throw;
        chart.normalization = Normalization::MarkedCritAtMinusOne;
        chart.marked_log = cplx{0.0, std::numbers::pi};
    }
    const auto lattice = make_lattice(chart.multiplier);
    cplx base{0.0, 0.0};
    try {
        base = normalized_log(chart, map, c);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotInBasin)
            throw;
    }
    const auto annulus = make_annulus(base, twist, lattice, half_width);
    return {std::move(map), chart, annulus, lattice};
}

} // namespace spinlab
