// spinlab command-line driver.
//
//   spinlab <subcommand> [--config PATH] [--out DIR] [--set key=value]...
//
// Exit status: 0 success (a Diverged trace included), 1 usage or config
// error, 2 numerical failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinlab/spinlab.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spinlab;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Invocation {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
};

io::RunConfig load(std::map<std::string, std::string> defaults, const Invocation& inv)
{
    io::RunConfig cfg(std::move(defaults));
    try {
        if (!inv.config_path.empty())
            cfg.apply_file(inv.config_path);
        for (const auto& o : inv.overrides)
            cfg.apply_override(o);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Reads a key; parse failures are config errors naming the key.
template <class F>
auto get(const io::RunConfig& cfg, const std::string& key, F&& reader)
{
    try {
        return reader(cfg, key);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

double real(const io::RunConfig& c, const std::string& k) { return get(c, k, [](auto& cf, auto& kk) { return cf.real(kk); }); }
long integer(const io::RunConfig& c, const std::string& k) { return get(c, k, [](auto& cf, auto& kk) { return cf.integer(kk); }); }
cplx complex(const io::RunConfig& c, const std::string& k) { return get(c, k, [](auto& cf, auto& kk) { return cf.complex(kk); }); }
bool boolean(const io::RunConfig& c, const std::string& k) { return get(c, k, [](auto& cf, auto& kk) { return cf.boolean(kk); }); }
std::vector<double> reals(const io::RunConfig& c, const std::string& k) { return get(c, k, [](auto& cf, auto& kk) { return cf.reals(kk); }); }

/// "x,y; x,y; ..." as a complex list.
std::vector<cplx> complex_list(const io::RunConfig& c, const std::string& key)
{
    std::vector<cplx> out;
    for (const auto& item : io::split(c.str(key), ';'))
        out.push_back(get(c, key, [&](auto&, auto& k) { return io::parse_complex(k, item); }));
    return out;
}

json jc(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

json meta()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return json{{"tool", "spinlab"}, {"version", kToolVersion}, {"created", buf}};
}

json document(const std::string& kind, const io::RunConfig& cfg)
{
    json config = json::object();
    for (const auto& [k, v] : cfg.values())
        config[k] = v;
    return json{{"schema_version", kSchemaVersion}, {"kind", kind}, {"meta", meta()}, {"config", config}};
}

fs::path prepare_out(const Invocation& inv)
{
    const fs::path out(inv.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
    return out;
}

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path.string() + "'");
    f << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- trace-spin

std::map<std::string, std::string> trace_defaults()
{
    const TraceConfig d;
    return {
        {"family", "cubic"},
        {"c_start", io::fmt(cubic::c0)},
        {"critical_points", ""},
        {"multiplicities", ""},
        {"marked", "2"},
        {"spun", "1"},
        {"twist", "0"},
        {"half_width", "0"},
        {"t_step_init", io::fmt(d.t_step_init)},
        {"t_step_min", io::fmt(d.t_step_min)},
        {"t_step_max", io::fmt(d.t_step_max)},
        {"corrector_tol", io::fmt(d.corrector_tol)},
        {"newton_max_iter", std::to_string(d.newton_max_iter)},
        {"divergence_radius", io::fmt(d.divergence_radius)},
        {"max_t", io::fmt(d.max_t)},
        {"max_states", std::to_string(d.max_states)},
        {"visible_after", "0"},
        {"landing_multiplier_tol", io::fmt(d.landing_multiplier_tol)},
        {"landing_distance_tol", io::fmt(d.landing_distance_tol)},
        {"contraction_ratio", io::fmt(d.contraction_ratio)},
        {"landing_confirmations", std::to_string(d.landing_confirmations)},
        {"visibility_resolution", "1024"},
        {"gamma_band_eps", "0.08"},
    };
}

TraceConfig trace_config(const io::RunConfig& cfg)
{
    TraceConfig t;
    t.t_step_init = real(cfg, "t_step_init");
    t.t_step_min = real(cfg, "t_step_min");
    t.t_step_max = real(cfg, "t_step_max");
    t.corrector_tol = real(cfg, "corrector_tol");
    t.newton_max_iter = static_cast<int>(integer(cfg, "newton_max_iter"));
    t.divergence_radius = real(cfg, "divergence_radius");
    t.max_t = real(cfg, "max_t");
    t.max_states = static_cast<std::size_t>(integer(cfg, "max_states"));
    t.landing_multiplier_tol = real(cfg, "landing_multiplier_tol");
    t.landing_distance_tol = real(cfg, "landing_distance_tol");
    t.contraction_ratio = real(cfg, "contraction_ratio");
    t.landing_confirmations = static_cast<int>(integer(cfg, "landing_confirmations"));
    if (!(t.t_step_min > 0.0 && t.t_step_min <= t.t_step_init && t.t_step_init <= t.t_step_max))
        throw ConfigError("key 't_step_init': need 0 < t_step_min <= t_step_init <= t_step_max");
    if (!(t.corrector_tol > 0.0))
        throw ConfigError("key 'corrector_tol' must be positive");
    if (t.landing_confirmations < 1)
        throw ConfigError("key 'landing_confirmations' must be at least 1");
    return t;
}

struct ProblemSetup {
    std::unique_ptr<SpinProblem> problem;
    CVector start;
    /// Only for the cubic family: needed by visible_after = auto.
    std::optional<cplx> cubic_start;
};

ProblemSetup make_problem(const io::RunConfig& cfg)
{
    const std::string family = cfg.str("family");
    const int twist = static_cast<int>(integer(cfg, "twist"));
    const double half_width = real(cfg, "half_width");
    if (half_width < 0.0)
        throw ConfigError("key 'half_width' must be non-negative (0 selects the default)");
    ProblemSetup s;
    if (family == "cubic") {
        const cplx c = complex(cfg, "c_start");
        if (c == cplx{0.0, 0.0})
            throw Error(ErrorCode::DegenerateParameter, "key 'c_start': c = 0 is degenerate");
        s.problem = std::make_unique<CubicSliceProblem>(c, twist, half_width);
        s.start = {c};
        s.cubic_start = c;
    } else if (family == "monic") {
        const auto crit = complex_list(cfg, "critical_points");
        std::vector<int> mult;
        for (const double m : reals(cfg, "multiplicities"))
            mult.push_back(static_cast<int>(m));
        if (crit.size() < 2 || crit.size() != mult.size())
            throw ConfigError("keys 'critical_points' and 'multiplicities' need the same length, at least 2");
        const long marked = integer(cfg, "marked"), spun = integer(cfg, "spun");
        if (marked < 1 || spun < 1 || static_cast<std::size_t>(std::max(marked, spun)) > crit.size())
            throw ConfigError("keys 'marked' and 'spun' are 1-based critical point labels");
        s.problem = std::make_unique<MonicSliceProblem>(CVector(crit.begin(), crit.end()), mult,
                                                        static_cast<std::size_t>(marked - 1),
                                                        static_cast<std::size_t>(spun - 1), twist, half_width);
        s.start = CVector(crit.begin(), crit.end());
    } else {
        throw ConfigError("key 'family': expected cubic or monic, got '" + family + "'");
    }
    return s;
}

int resolve_visible_after(const io::RunConfig& cfg, const ProblemSetup& s, json& doc)
{
    const std::string v = cfg.str("visible_after");
    if (v != "auto")
        return static_cast<int>(integer(cfg, "visible_after"));
    if (!s.cubic_start)
        throw ConfigError("key 'visible_after': auto is only available for the cubic family");
    const auto setup = cubic_visibility_setup(*s.cubic_start, static_cast<int>(integer(cfg, "twist")),
                                              real(cfg, "half_width"));
    const auto masks = build_masks(setup.map, setup.chart, setup.annulus, setup.lattice,
                                   default_grid(setup.chart, static_cast<int>(integer(cfg, "visibility_resolution")),
                                                real(cfg, "gamma_band_eps")));
    const auto r = visibility_steps(masks, *s.cubic_start);
    doc["visibility"] = to_string(r);
    if (r.kind == VisibilityKind::Visible)
        return 0;
    if (r.kind == VisibilityKind::VisibleAfter)
        return r.steps;
    throw Error(ErrorCode::InvalidArgument, "spun critical point is " + to_string(r) + "; no visible_after available");
}

void write_trace_csv(const fs::path& path, const SpinTrace& tr, std::size_t dim)
{
    std::vector<std::string> header{"t", "re_c", "im_c", "re_achieved", "im_achieved", "residual"};
    if (dim > 1)
        for (std::size_t k = 1; k <= dim; ++k) {
            header.push_back("re_x" + std::to_string(k));
            header.push_back("im_x" + std::to_string(k));
        }
    for (const char* h : {"re_u_plus", "im_u_plus", "re_u_minus", "im_u_minus", "re_lambda_plus", "im_lambda_plus",
                          "re_lambda_minus", "im_lambda_minus", "index_sum_real", "tangency_plus", "tangency_minus",
                          "separation", "landing_distance"})
        header.emplace_back(h);
    io::CsvWriter csv(path.string(), header);
    for (const auto& s : tr.states) {
        std::vector<double> row{s.t,
                                s.parameter.real(),
                                s.parameter.imag(),
                                s.achieved_log.real(),
                                s.achieved_log.imag(),
                                s.newton_residual};
        if (dim > 1)
            for (const cplx& x : s.coordinates) {
                row.push_back(x.real());
                row.push_back(x.imag());
            }
        const double idx = index_term(s.lambda_plus) + index_term(s.lambda_minus);
        for (const double v : {s.u_plus.real(), s.u_plus.imag(), s.u_minus.real(), s.u_minus.imag(),
                               s.lambda_plus.real(), s.lambda_plus.imag(), s.lambda_minus.real(),
                               s.lambda_minus.imag(), idx, std::abs(std::arg(1.0 - s.lambda_plus)),
                               std::abs(std::arg(1.0 - s.lambda_minus)), std::abs(s.u_plus - s.u_minus),
                               s.landing_distance})
            row.push_back(v);
        csv.row(row);
    }
}

json outcome_json(const SpinTrace& tr)
{
    const auto& o = tr.outcome;
    json j{{"outcome", std::string(to_string(o.kind))}, {"states", tr.states.size()}};
    if (!tr.states.empty())
        j["t_final"] = tr.states.back().t;
    if (o.kind == OutcomeKind::Aborted) {
        j["abort_reason"] = std::string(to_string(o.abort_reason));
    } else {
        j["limit_class"] = std::string(to_string(o.limit_class));
        j["c_limit"] = jc(o.parameter_limit);
        if (o.coordinates_limit.size() > 1) {
            json coords = json::array();
            for (const cplx& x : o.coordinates_limit)
                coords.push_back(jc(x));
            j["coordinates_limit"] = coords;
        }
    }
    if (o.special_point) {
        j[o.limit_class == LimitClass::MisiurewiczLanding ? "landing_point" : "parabolic_point"] = jc(*o.special_point);
        j["special_multiplier"] = jc(o.special_multiplier.value_or(cplx{}));
        j["refinement_residual"] = o.refinement_residual;
    }
    if (o.limit_class == LimitClass::MisiurewiczLanding)
        j["misiurewicz_steps"] = o.misiurewicz_steps;
    if (!o.message.empty())
        j["message"] = o.message;
    return j;
}

int cmd_trace_spin(const Invocation& inv)
{
    const auto cfg = load(trace_defaults(), inv);
    auto tc = trace_config(cfg);
    auto setup = make_problem(cfg);
    const auto out = prepare_out(inv);
    json doc = document("trace-spin", cfg);
    tc.visible_after = resolve_visible_after(cfg, setup, doc);
    const auto tr = trace(*setup.problem, tc, setup.start);
    write_trace_csv(out / "trace.csv", tr, setup.problem->dimension());
    doc["result"] = outcome_json(tr);
    write_json(out / "outcome.json", doc);
    std::cout << to_string(tr.outcome.kind);
    if (tr.outcome.kind == OutcomeKind::Aborted)
        std::cout << " (" << to_string(tr.outcome.abort_reason) << ")";
    else
        std::cout << " " << to_string(tr.outcome.limit_class) << " c_limit = " << io::fmt(tr.outcome.parameter_limit.real())
                  << (tr.outcome.parameter_limit.imag() < 0 ? " - " : " + ")
                  << io::fmt(std::abs(tr.outcome.parameter_limit.imag())) << "i";
    std::cout << "\n";
    return tr.outcome.kind == OutcomeKind::Aborted ? 2 : 0;
}

// ------------------------------------------------------- classify-visibility

int cmd_classify_visibility(const Invocation& inv)
{
    const auto cfg = load({{"c", io::fmt(cubic::c0)},
                           {"twist", "0"},
                           {"half_width", "0"},
                           {"resolution", "auto"},
                           {"gamma_band_eps", "0.08"},
                           {"orbit_budget", std::to_string(kDefaultOrbitBudget)},
                           {"step_budget", "16"},
                           {"write_masks", "false"}},
                          inv);
    const cplx c = complex(cfg, "c");
    if (c == cplx{0.0, 0.0})
        throw Error(ErrorCode::DegenerateParameter, "key 'c': c = 0 is degenerate");
    const auto out = prepare_out(inv);
    const auto setup = cubic_visibility_setup(c, static_cast<int>(integer(cfg, "twist")), real(cfg, "half_width"));
    const auto masks_at = [&](int res) {
        auto grid = default_grid(setup.chart, res, real(cfg, "gamma_band_eps"));
        grid.orbit_budget = static_cast<int>(integer(cfg, "orbit_budget"));
        return build_masks(setup.map, setup.chart, setup.annulus, setup.lattice, grid);
    };
    std::optional<GridMasks> built;
    int res = 0;
    if (cfg.str("resolution") == "auto") {
        // Smallest of 512..2048 that resolves the Gamma band.
        for (res = 512;; res *= 2) {
            try {
                built = masks_at(res);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ResolutionTooCoarse || res >= 2048)
                    throw;
            }
        }
    } else {
        res = static_cast<int>(integer(cfg, "resolution"));
        built = masks_at(res);
    }
    const auto& masks = *built;
    const auto rep = classify_critical_points(masks, static_cast<int>(integer(cfg, "step_budget")));

    json doc = document("classify-visibility", cfg);
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json j{{"label", e.label}, {"location", jc(e.location)}, {"kind", to_string(e.result)}};
        if (e.result.kind == VisibilityKind::VisibleAfter)
            j["steps"] = e.result.steps;
        entries.push_back(j);
        std::cout << e.label << ": " << to_string(e.result) << "\n";
    }
    doc["result"] = json{{"entries", entries},
                         {"half_width", setup.annulus.half_width},
                         {"adjacent_components", masks.adjacent_count},
                         {"components", masks.component_count},
                         {"resolution", res}};
    write_json(out / "visibility.json", doc);
    if (boolean(cfg, "write_masks")) {
        write_label_pgm(masks, (out / "labels.pgm").string());
        write_pbm(masks.basin, masks.width, masks.height, (out / "basin.pbm").string());
        write_pbm(masks.gamma, masks.width, masks.height, (out / "gamma.pbm").string());
        write_ppm(render_mask_overlay(masks), (out / "overlay.ppm").string());
    }
    return 0;
}

// ------------------------------------------------------------------- renders

Window window_from(const io::RunConfig& cfg)
{
    Window w;
    w.center = complex(cfg, "center");
    w.half_width_x = real(cfg, "half_width_x");
    w.half_width_y = real(cfg, "half_width_y");
    w.width = static_cast<int>(integer(cfg, "width"));
    w.height = static_cast<int>(integer(cfg, "height"));
    try {
        validate(w);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return w;
}

Palette palette_of(const io::RunConfig& cfg)
{
    try {
        return palette_from_string(cfg.str("palette"));
    } catch (const Error& e) {
        throw ConfigError(std::string("key 'palette': ") + e.what());
    }
}

void mark_fixed_points(Image& img, const Window& w, const MarkedPolynomial& map)
{
    for (const auto& fp : fixed_points(map))
        mark(img, w, fp.location, palette::kMarker);
}

int cmd_render_julia(const Invocation& inv)
{
    const auto cfg = load({{"c", io::fmt(cubic::c0)},
                           {"center", "0"},
                           {"half_width_x", "2"},
                           {"half_width_y", "2"},
                           {"width", "512"},
                           {"height", "512"},
                           {"palette", "classic"},
                           {"cap", std::to_string(kIterationCap)},
                           {"mark_fixed_points", "false"}},
                          inv);
    const cplx c = complex(cfg, "c");
    if (c == cplx{0.0, 0.0})
        throw Error(ErrorCode::DegenerateParameter, "key 'c': c = 0 is degenerate");
    const auto w = window_from(cfg);
    const auto pal = palette_of(cfg);
    const auto out = prepare_out(inv);
    const auto map = make_cubic(c);
    std::optional<LinearizationChart> chart;
    try {
        chart = make_chart(map, 0.0);
    } catch (const Error&) {
    }
    auto img = render_julia(map, chart ? &*chart : nullptr, w, pal, static_cast<int>(integer(cfg, "cap")));
    if (boolean(cfg, "mark_fixed_points"))
        mark_fixed_points(img, w, map);
    write_ppm(img, (out / "julia.ppm").string());
    return 0;
}

int cmd_render_param(const Invocation& inv)
{
    const auto d = default_param_window();
    const auto cfg = load({{"mode", "b"},
                           {"immediate_resolution", "0"},
                           {"center", "0"},
                           {"half_width_x", io::fmt(d.half_width_x)},
                           {"half_width_y", io::fmt(d.half_width_y)},
                           {"width", std::to_string(d.width)},
                           {"height", std::to_string(d.height)},
                           {"cap", std::to_string(kIterationCap)},
                           {"overlay_path", "false"},
                           {"c_start", io::fmt(cubic::c0)},
                           {"twist", "0"}},
                          inv);
    ParamOptions opt;
    try {
        opt.mode = param_mode_from_string(cfg.str("mode"));
    } catch (const Error& e) {
        throw ConfigError(std::string("key 'mode': ") + e.what());
    }
    opt.immediate_resolution = static_cast<int>(integer(cfg, "immediate_resolution"));
    opt.cap = static_cast<int>(integer(cfg, "cap"));
    const auto w = window_from(cfg);
    const auto out = prepare_out(inv);
    std::vector<cplx> path;
    if (boolean(cfg, "overlay_path")) {
        const cplx c = complex(cfg, "c_start");
        if (c == cplx{0.0, 0.0})
            throw Error(ErrorCode::DegenerateParameter, "key 'c_start': c = 0 is degenerate");
        const CubicSliceProblem p(c, static_cast<int>(integer(cfg, "twist")));
        const auto tr = trace(p, TraceConfig{}, CVector{c});
        for (const auto& s : tr.states)
            path.push_back(s.parameter);
        if (tr.outcome.kind == OutcomeKind::Landed)
            path.push_back(tr.outcome.parameter_limit);
    }
    auto img = render_param(w, opt, path);
    if (!path.empty()) {
        mark(img, w, path.front(), palette::kMarker);
        mark(img, w, path.back(), palette::kMarker);
    }
    write_ppm(img, (out / "param.ppm").string());
    return 0;
}

int cmd_render_evolution(const Invocation& inv)
{
    auto defaults = trace_defaults();
    defaults.erase("family");
    defaults.erase("critical_points");
    defaults.erase("multiplicities");
    defaults.erase("marked");
    defaults.erase("spun");
    defaults.erase("visibility_resolution");
    defaults.erase("gamma_band_eps");
    defaults.merge(std::map<std::string, std::string>{{"t_values", "0,1,2,4,8,16,64"},
                                                      {"center", "0"},
                                                      {"half_width_x", "2"},
                                                      {"half_width_y", "2"},
                                                      {"width", "400"},
                                                      {"height", "400"},
                                                      {"palette", "classic"}});
    auto cfg = load(defaults, inv);
    const auto tc = trace_config(cfg);
    const cplx c = complex(cfg, "c_start");
    if (c == cplx{0.0, 0.0})
        throw Error(ErrorCode::DegenerateParameter, "key 'c_start': c = 0 is degenerate");
    const auto ts = reals(cfg, "t_values");
    if (ts.empty())
        throw ConfigError("key 't_values' is empty");
    for (const double t : ts)
        if (!(t >= 0.0))
            throw ConfigError("key 't_values': times must be non-negative");
    const auto w = window_from(cfg);
    const auto pal = palette_of(cfg);
    const auto out = prepare_out(inv);

    const CubicSliceProblem p(c, static_cast<int>(integer(cfg, "twist")), real(cfg, "half_width"));
    auto tc_run = tc;
    tc_run.visible_after = static_cast<int>(integer(cfg, "visible_after"));
    tc_run.max_t = std::min(tc.max_t, *std::max_element(ts.begin(), ts.end()) + 1.0);
    const auto tr = trace(p, tc_run, CVector{c});

    json frames = json::array();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const cplx ct = state_at(p, tr, ts[k], tc)[0];
        const auto map = make_cubic(ct);
        const auto chart = make_chart(map, 0.0);
        auto img = render_julia(map, &chart, w, pal);
        mark_fixed_points(img, w, map);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.ppm", k);
        write_ppm(img, (out / name).string());
        frames.push_back(json{{"t", ts[k]}, {"c", jc(ct)}, {"file", name}});
    }
    json doc = document("render-evolution", cfg);
    doc["result"] = json{{"frames", frames}};
    write_json(out / "evolution.json", doc);
    return 0;
}

// -------------------------------------------------------------- fixed-points

int cmd_fixed_points(const Invocation& inv)
{
    const auto cfg = load({{"family", "cubic"}, {"c", io::fmt(cubic::c0)}, {"critical_points", ""}, {"multiplicities", ""}},
                          inv);
    const std::string family = cfg.str("family");
    std::optional<MarkedPolynomial> map;
    if (family == "cubic") {
        const cplx c = complex(cfg, "c");
        if (c == cplx{0.0, 0.0})
            throw Error(ErrorCode::DegenerateParameter, "key 'c': c = 0 is degenerate");
        map = make_cubic(c);
    } else if (family == "monic") {
        const auto crit = complex_list(cfg, "critical_points");
        std::vector<int> mult;
        for (const double m : reals(cfg, "multiplicities"))
            mult.push_back(static_cast<int>(m));
        if (crit.empty() || crit.size() != mult.size())
            throw ConfigError("keys 'critical_points' and 'multiplicities' need the same non-zero length");
        map = make_monic(crit, mult);
    } else {
        throw ConfigError("key 'family': expected cubic or monic, got '" + family + "'");
    }
    const auto out = prepare_out(inv);
    json list = json::array();
    for (const auto& fp : fixed_points(*map)) {
        list.push_back(json{{"location", jc(fp.location)},
                            {"multiplier", jc(fp.multiplier)},
                            {"classification", std::string(to_string(fp.classification))},
                            {"index", jc(fp.index)},
                            {"multiplicity", fp.multiplicity}});
        std::cout << io::fmt(fp.location.real()) << " " << io::fmt(fp.location.imag()) << " "
                  << to_string(fp.classification) << "\n";
    }
    json doc = document("fixed-points", cfg);
    doc["result"] = json{{"fixed_points", list}};
    write_json(out / "fixed_points.json", doc);
    return 0;
}

/// Errors that mean "the request itself was bad" rather than "the numerics failed".
bool is_config_error(ErrorCode code)
{
    return code == ErrorCode::InvalidArgument || code == ErrorCode::DegenerateParameter
           || code == ErrorCode::InvalidAnnulus || code == ErrorCode::SuperattractingUnsupported;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spinning deformations of polynomial maps"};
    app.require_subcommand(1);
    Invocation inv;
    std::map<std::string, std::function<int(const Invocation&)>> commands{
        {"trace-spin", cmd_trace_spin},
        {"classify-visibility", cmd_classify_visibility},
        {"render-julia", cmd_render_julia},
        {"render-param", cmd_render_param},
        {"render-evolution", cmd_render_evolution},
        {"fixed-points", cmd_fixed_points},
    };
    const std::map<std::string, std::string> help{
        {"trace-spin", "Trace the spinning path and classify its limit"},
        {"classify-visibility", "Classify critical points as visible / visible after r steps"},
        {"render-julia", "Escape-time picture of a cubic Julia set"},
        {"render-param", "Parameter-plane locus picture"},
        {"render-evolution", "Julia sets along a traced path"},
        {"fixed-points", "Fixed points with multipliers and indices"},
    };
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", inv.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--out", inv.out_dir, "output directory");
        sub->add_option("--set", inv.overrides, "override a config key (key=value), repeatable")->allow_extra_args(false);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto* chosen = app.get_subcommands().front();
    try {
        return commands.at(chosen->get_name())(inv);
    } catch (const ConfigError& e) {
        std::cerr << "spinlab: config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "spinlab: " << e.what() << "\n";
        return is_config_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "spinlab: " << e.what() << "\n";
        return 2;
    }
}
