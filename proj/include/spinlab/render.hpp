#pragma once

// Escape-time Julia sets, parameter-plane loci of the cubic slice, spin
// evolution frames and mask overlays, written as binary PPM / PGM / PBM.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/koenigs.hpp"
#include "spinlab/parallel.hpp"
#include "spinlab/polyfam.hpp"
#include "spinlab/visibility.hpp"

namespace spinlab {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Image() = default;
    Image(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
    Rgb& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    const Rgb& at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    bool operator==(const Image&) const = default;
};

/// Complex rectangle sampled at pixel centres, row 0 at the top.
struct Window {
    cplx center{0.0, 0.0};
    double half_width_x = 2.0;
    double half_width_y = 2.0;
    int width = 256;
    int height = 256;

    cplx point(int row, int col) const
    {
        return center + cplx{-half_width_x + (col + 0.5) * 2.0 * half_width_x / width,
                             half_width_y - (row + 0.5) * 2.0 * half_width_y / height};
    }

    /// Nearest pixel to z, or {-1, -1} outside.
    std::pair<int, int> pixel(cplx z) const
    {
        const cplx d = z - center;
        const double col = std::floor((d.real() + half_width_x) * width / (2.0 * half_width_x));
        const double row = std::floor((half_width_y - d.imag()) * height / (2.0 * half_width_y));
        if (!(col >= 0.0 && col < width && row >= 0.0 && row < height))
            return {-1, -1};
        return {static_cast<int>(row), static_cast<int>(col)};
    }
};

inline void validate(const Window& w)
{
    if (w.width < 16 || w.height < 16)
        throw Error(ErrorCode::InvalidArgument, "image resolution must be at least 16");
    if (!(w.half_width_x > 0.0 && w.half_width_y > 0.0))
        throw Error(ErrorCode::InvalidArgument, "window half-widths must be positive");
}

enum class Palette { Classic, Gray };

inline Palette palette_from_string(std::string_view s)
{
    if (s == "classic")
        return Palette::Classic;
    if (s == "gray")
        return Palette::Gray;
    throw Error(ErrorCode::InvalidArgument, "unknown palette '" + std::string(s) + "'");
}

namespace palette {

inline constexpr Rgb kBounded{0, 0, 0};
inline constexpr Rgb kShaded{160, 160, 160};
inline constexpr Rgb kUnshaded{255, 255, 255};
inline constexpr Rgb kPath{200, 0, 0};
inline constexpr Rgb kMarker{0, 0, 200};

/// Escaped orbits: colour cycles every 32 iterations.
inline Rgb escaped(Palette p, int n)
{
    const int k = n % 32;
    if (p == Palette::Gray) {
        const auto v = static_cast<std::uint8_t>(255 - 6 * k);
        return {v, v, v};
    }
    return {static_cast<std::uint8_t>(40 + 6 * k), static_cast<std::uint8_t>(80 + 5 * k), 255};
}

/// Orbits captured by the attractor's local disk.
inline Rgb basin(Palette p, int n)
{
    const int k = n % 32;
    if (p == Palette::Gray) {
        const auto v = static_cast<std::uint8_t>(60 + 3 * k);
        return {v, v, v};
    }
    return {255, static_cast<std::uint8_t>(200 - 4 * k), static_cast<std::uint8_t>(60 + 2 * k)};
}

} // namespace palette

/// |z| > R implies |f(z)| >= 2|z|; at least 4 for the monic family.
inline double escape_radius(const MarkedPolynomial& map)
{
    const double r = poly::escape_radius(map.coefficients());
    return std::holds_alternative<GeneralMonic>(map.family()) ? std::max(r, 4.0) : r;
}

inline constexpr int kIterationCap = 1000;

enum class PixelFate : std::uint8_t { Escaped, Captured, Undecided };

struct Fate {
    PixelFate kind = PixelFate::Undecided;
    int steps = 0;
};

/// Escape past R, capture by the local disk of `chart`, or neither within `cap`.
inline Fate orbit_fate(const MarkedPolynomial& map, const LinearizationChart* chart, double radius, cplx z,
                       int cap = kIterationCap)
{
    for (int n = 0; n < cap; ++n) {
        if (chart && std::abs(z - chart->attractor) < chart->local_radius)
            return {PixelFate::Captured, n};
        if (std::abs(z) > radius)
            return {PixelFate::Escaped, n};
        z = map(z);
    }
    return {PixelFate::Undecided, cap};
}

/// Escape-time picture; the attractor's basin is shaded separately when `chart` is given.
inline Image render_julia(const MarkedPolynomial& map, const LinearizationChart* chart, const Window& window,
                          Palette pal = Palette::Classic, int cap = kIterationCap)
{
    validate(window);
    const double radius = escape_radius(map);
    Image img(window.width, window.height);
    parallel_for(static_cast<std::size_t>(window.height), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        for (int c = 0; c < window.width; ++c) {
            const auto f = orbit_fate(map, chart, radius, window.point(r, c), cap);
            img.at(r, c) = f.kind == PixelFate::Escaped    ? palette::escaped(pal, f.steps)
                           : f.kind == PixelFate::Captured ? palette::basin(pal, f.steps)
                                                           : palette::kBounded;
        }
    });
    return img;
}

/// Julia set of the cubic slice at c with the basin of 0 shaded.
inline Image render_cubic_julia(cplx c, const Window& window, Palette pal = Palette::Classic)
{
    const auto map = make_cubic(c);
    const auto chart = make_chart(map, 0.0);
    return render_julia(map, &chart, window, pal);
}

enum class ParamMode { BothCritsImmediate, BInBasin };

inline ParamMode param_mode_from_string(std::string_view s)
{
    if (s == "both")
        return ParamMode::BothCritsImmediate;
    if (s == "b")
        return ParamMode::BInBasin;
    throw Error(ErrorCode::InvalidArgument, "unknown parameter mode '" + std::string(s) + "'");
}

struct ParamOptions {
    ParamMode mode = ParamMode::BInBasin;
    /// Require the critical points to lie in the component of the basin that
    /// contains 0, judged on a dynamical raster of this size (0 = off).
    int immediate_resolution = 0;
    int cap = kIterationCap;
};

/// Default window of the parameter pictures.
inline Window default_param_window(int width = 800, int height = 600)
{
    return {cplx{0.0, 0.0}, 5.6, 4.2, width, height};
}

namespace detail {

/// Flood fill of the captured pixels of f(c, .) from the pixel of 0.
inline bool in_immediate_basin(const MarkedPolynomial& map, const LinearizationChart& chart,
                               std::span<const cplx> points, int resolution, int cap)
{
    const double radius = escape_radius(map);
    const Window w{0.0, radius, radius, resolution, resolution};
    std::vector<std::uint8_t> captured(static_cast<std::size_t>(resolution) * resolution, 0);
    for (int r = 0; r < resolution; ++r)
        for (int c = 0; c < resolution; ++c)
            captured[static_cast<std::size_t>(r) * resolution + c] =
                orbit_fate(map, &chart, radius, w.point(r, c), cap).kind == PixelFate::Captured;
    std::vector<std::uint8_t> seen(captured.size(), 0);
    const auto [r0, c0] = w.pixel(chart.attractor);
    if (r0 < 0)
        return false;
    std::queue<std::pair<int, int>> q;
    seen[static_cast<std::size_t>(r0) * resolution + c0] = 1;
    q.emplace(r0, c0);
    while (!q.empty()) {
        const auto [pr, pc] = q.front();
        q.pop();
        constexpr int dr[4] = {-1, 1, 0, 0};
        constexpr int dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int nr = pr + dr[k], nc = pc + dc[k];
            if (nr < 0 || nr >= resolution || nc < 0 || nc >= resolution)
                continue;
            const auto j = static_cast<std::size_t>(nr) * resolution + nc;
            if (captured[j] && !seen[j]) {
                seen[j] = 1;
                q.emplace(nr, nc);
            }
        }
    }
    for (const cplx& z : points) {
        const auto [pr, pc] = w.pixel(z);
        if (pr < 0 || !seen[static_cast<std::size_t>(pr) * resolution + pc])
            return false;
    }
    return true;
}

} // namespace detail

/// Membership of c in the shaded locus for the given mode.
inline bool param_shaded(cplx c, const ParamOptions& opt)
{
    if (c == cplx{0.0, 0.0})
        return false;
    const auto map = make_cubic(c);
    LinearizationChart chart;
    try {
        chart = make_chart(map, 0.0);
    } catch (const Error&) {
        return false;
    }
    const double radius = escape_radius(map);
    const cplx b = cubic::b_of(c);
    if (orbit_fate(map, &chart, radius, b, opt.cap).kind != PixelFate::Captured)
        return false;
    if (opt.mode == ParamMode::BothCritsImmediate
        && orbit_fate(map, &chart, radius, c, opt.cap).kind != PixelFate::Captured)
        return false;
    if (opt.immediate_resolution > 0) {
        const std::vector<cplx> pts = opt.mode == ParamMode::BothCritsImmediate ? std::vector<cplx>{b, c}
                                                                                : std::vector<cplx>{b};
        return detail::in_immediate_basin(map, chart, pts, opt.immediate_resolution, opt.cap);
    }
    return true;
}

inline void draw_segment(Image& img, const Window& w, cplx a, cplx b, Rgb color)
{
    const auto [ra, ca] = w.pixel(a);
    const auto [rb, cb] = w.pixel(b);
    const int steps = std::max({1, std::abs(rb - ra), std::abs(cb - ca)});
    for (int k = 0; k <= steps; ++k) {
        const cplx z = a + (b - a) * (static_cast<double>(k) / steps);
        const auto [r, c] = w.pixel(z);
        if (r >= 0)
            img.at(r, c) = color;
    }
}

inline Image render_param(const Window& window, const ParamOptions& opt, std::span<const cplx> path = {})
{
    validate(window);
    Image img(window.width, window.height);
    parallel_for(static_cast<std::size_t>(window.height), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        for (int c = 0; c < window.width; ++c)
            img.at(r, c) = param_shaded(window.point(r, c), opt) ? palette::kShaded : palette::kUnshaded;
    });
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
        draw_segment(img, window, path[k], path[k + 1], palette::kPath);
    return img;
}

/// Lighter where the Koenigs value lies in the annulus, black on Gamma,
/// blue tint on basin components that do not reach the attractor.
inline Image render_mask_overlay(const GridMasks& m)
{
    Image img(m.width, m.height);
    const double two_l = 2.0 * m.annulus.half_width;
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
            const auto i = m.index(r, c);
            Rgb px{40, 40, 40};
            if (m.gamma[i])
                px = {0, 0, 0};
            else if (m.basin[i]) {
                const bool inside = std::abs(m.across[i]) < two_l;
                px = inside ? Rgb{250, 235, 170} : Rgb{190, 150, 60};
                if (!m.adjacent(m.labels[i]))
                    px = inside ? Rgb{170, 200, 250} : Rgb{80, 110, 190};
            }
            img.at(r, c) = px;
        }
    return img;
}

inline void mark(Image& img, const Window& w, cplx z, Rgb color, int half = 2)
{
    const auto [r0, c0] = w.pixel(z);
    if (r0 < 0)
        return;
    for (int r = std::max(0, r0 - half); r <= std::min(img.height - 1, r0 + half); ++r)
        for (int c = std::max(0, c0 - half); c <= std::min(img.width - 1, c0 + half); ++c)
            img.at(r, c) = color;
}

namespace detail {

inline std::ofstream open_binary(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    return out;
}

} // namespace detail

inline void write_ppm(const Image& img, const std::string& path)
{
    auto out = detail::open_binary(path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (const Rgb& p : img.pixels) {
        const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(bytes, 3);
    }
}

/// Labels as 16-bit PGM: 0 off the basin or on Gamma, label + 1 elsewhere.
inline void write_label_pgm(const GridMasks& m, const std::string& path)
{
    auto out = detail::open_binary(path);
    out << "P5\n" << m.width << ' ' << m.height << "\n65535\n";
    for (std::int32_t label : m.labels) {
        const auto v = static_cast<std::uint16_t>(std::clamp<std::int32_t>(label + 1, 0, 65535));
        const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
        out.write(bytes, 2);
    }
}

/// 1-bit mask as PBM (1 = black = set).
inline void write_pbm(const std::vector<std::uint8_t>& mask, int width, int height, const std::string& path)
{
    auto out = detail::open_binary(path);
    out << "P4\n" << width << ' ' << height << '\n';
    const int stride = (width + 7) / 8;
    std::vector<char> row(static_cast<std::size_t>(stride));
    for (int r = 0; r < height; ++r) {
        std::fill(row.begin(), row.end(), 0);
        for (int c = 0; c < width; ++c)
            if (mask[static_cast<std::size_t>(r) * width + c])
                row[static_cast<std::size_t>(c / 8)] |= static_cast<char>(0x80 >> (c % 8));
        out.write(row.data(), stride);
    }
}

} // namespace spinlab
