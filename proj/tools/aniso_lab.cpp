// aniso_lab: command-line driver for the anisotropic p-Laplacian lab.
//
//   aniso_lab <subcommand> [--config RUN.toml] [--out PREFIX] [--seed S] [--threads T] ...
//
// Every run writes PREFIX_report.json (config echo, versions, results), also
// when it fails. Exit status: 0 success, 1 numerical failure, 2 usage/config error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "aniso/aniso.hpp"

using json = nlohmann::ordered_json;
using namespace aniso;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOptions
{
    std::string config;
    std::string out = "aniso";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string p;  // comma-separated override of [problem].p
};

// ---------------------------------------------------------------------------
// Config access

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"problem", {"p", "validation"}},
        {"grid", {"n", "half", "center"}},
        {"solver",
         {"t0", "t_end", "output_dt", "cfl_safety", "eps_reg", "dt_max", "fixed_dt", "bc", "boundary_value",
          "snapshots"}},
        {"initial", {"kind", "amplitude", "base", "radius", "width", "file"}},
        {"fokker_planck",
         {"tol", "max_steps", "cfl_safety", "eps_reg", "history_every", "radius", "support_threshold", "family"}},
        {"degiorgi",
         {"side", "mu", "omega", "xi", "a", "theta", "rho", "gamma", "center", "t0", "orientation", "n_max"}},
        {"energy", {"levels", "sign", "center", "inner_half", "outer_half", "t_inner", "t_outer", "window"}},
        {"lsc", {"rho0", "rho_sequence", "b", "r", "a", "gamma", "max_samples", "defect_samples", "triangle_samples"}},
        {"scale", {"map", "rho", "M"}},
    };
    return keys;
}

class Config
{
public:
    Config() = default;

    static Config load(const std::string& path)
    {
        Config c;
        if (path.empty())
            return c;
        if (!std::filesystem::exists(path))
            throw ValidationError("config file '" + path + "' does not exist");
        try {
            c.root_ = toml::parse_file(path);
        } catch (const toml::parse_error& err) {
            std::ostringstream msg;
            msg << "config '" << path << "': " << err.description() << " at line " << err.source().begin.line;
            throw ValidationError(msg.str());
        }
        c.check_keys();
        return c;
    }

    json echo() const
    {
        std::ostringstream s;
        s << toml::json_formatter{root_};
        return json::parse(s.str());
    }

    const toml::table* section(const std::string& name) const { return root_[name].as_table(); }

    const toml::node* node(const std::string& sec, const std::string& key) const
    {
        const toml::table* t = section(sec);
        return t ? t->get(key) : nullptr;
    }

    std::optional<double> number(const std::string& sec, const std::string& key) const
    {
        const toml::node* n = node(sec, key);
        if (!n)
            return std::nullopt;
        if (auto v = n->value<double>())
            return *v;
        throw ValidationError("[" + sec + "] " + key + " must be a number");
    }

    double number(const std::string& sec, const std::string& key, double fallback) const
    {
        return number(sec, key).value_or(fallback);
    }

    std::size_t count(const std::string& sec, const std::string& key, std::size_t fallback) const
    {
        const toml::node* n = node(sec, key);
        if (!n)
            return fallback;
        const auto v = n->value<std::int64_t>();
        if (!n->is_integer() || !v || *v < 0)
            throw ValidationError("[" + sec + "] " + key + " must be a nonnegative integer");
        return static_cast<std::size_t>(*v);
    }

    std::string text(const std::string& sec, const std::string& key, const std::string& fallback) const
    {
        const toml::node* n = node(sec, key);
        if (!n)
            return fallback;
        if (auto v = n->value<std::string>())
            return *v;
        throw ValidationError("[" + sec + "] " + key + " must be a string");
    }

    bool flag(const std::string& sec, const std::string& key, bool fallback) const
    {
        const toml::node* n = node(sec, key);
        if (!n)
            return fallback;
        if (auto v = n->value<bool>())
            return *v;
        throw ValidationError("[" + sec + "] " + key + " must be a boolean");
    }

    // A scalar is broadcast to every axis.
    std::optional<std::vector<double>> numbers(const std::string& sec, const std::string& key, std::size_t dim) const
    {
        const toml::node* n = node(sec, key);
        if (!n)
            return std::nullopt;
        if (auto v = n->value<double>())
            return std::vector<double>(dim, *v);
        const toml::array* a = n->as_array();
        if (!a)
            throw ValidationError("[" + sec + "] " + key + " must be a number or a list of numbers");
        std::vector<double> out;
        for (const auto& item : *a) {
            auto v = item.value<double>();
            if (!v)
                throw ValidationError("[" + sec + "] " + key + " must hold numbers only");
            out.push_back(*v);
        }
        if (dim != 0 && out.size() != dim)
            throw ValidationError("[" + sec + "] " + key + " has " + std::to_string(out.size()) +
                                  " entries, expected " + std::to_string(dim));
        return out;
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key, std::size_t dim,
                                std::vector<double> fallback) const
    {
        return numbers(sec, key, dim).value_or(std::move(fallback));
    }

private:
    void check_keys() const
    {
        for (auto&& [k, v] : root_) {
            const std::string name(k.str());
            const auto it = known_keys().find(name);
            if (it == known_keys().end())
                throw ValidationError("config: unknown section [" + name + "]");
            const toml::table* t = v.as_table();
            if (!t)
                throw ValidationError("config: [" + name + "] must be a table");
            for (auto&& [kk, vv] : *t)
                if (!it->second.count(std::string(kk.str())))
                    throw ValidationError("config: unknown key '" + std::string(kk.str()) + "' in [" + name + "]");
        }
    }

    toml::table root_;
};

Rational rational_of(const toml::node& n)
{
    if (auto s = n.value_exact<std::string>())
        return parse_rational(*s);
    if (n.is_integer())
        return Rational(static_cast<long long>(*n.value<std::int64_t>()));
    if (auto d = n.value_exact<double>()) {
        // shortest round-trip text, so 3.5 becomes 7/2 exactly
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, *d);
        return parse_rational(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
    }
    throw ValidationError("[problem] p entries must be numbers or rational strings such as \"7/2\"");
}

AnisoExponents load_exponents(const Config& cfg, const CommonOptions& opt)
{
    std::vector<Rational> p;
    if (!opt.p.empty()) {
        std::stringstream s(opt.p);
        std::string item;
        while (std::getline(s, item, ','))
            p.push_back(parse_rational(item));
    } else {
        const toml::node* n = cfg.node("problem", "p");
        if (!n)
            throw ValidationError("missing exponents: set [problem] p or pass --p");
        const toml::array* a = n->as_array();
        if (!a)
            throw ValidationError("[problem] p must be a list");
        for (const auto& item : *a)
            p.push_back(rational_of(item));
    }
    const std::string mode = cfg.text("problem", "validation", "permissive");
    if (mode != "permissive" && mode != "strict")
        throw ValidationError("[problem] validation must be \"permissive\" or \"strict\"");
    return derive_exponents(PVector{p}, mode == "strict" ? Validation::strict : Validation::permissive);
}

Grid load_grid(const Config& cfg, std::size_t dim, std::size_t n_default = 64, double half_default = 2.0)
{
    const auto n = cfg.numbers("grid", "n", dim, std::vector<double>(dim, static_cast<double>(n_default)));
    const auto half = cfg.numbers("grid", "half", dim, std::vector<double>(dim, half_default));
    const auto center = cfg.numbers("grid", "center", dim, std::vector<double>(dim, 0.0));
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(n[i] >= 2.0) || n[i] != std::floor(n[i]))
            throw ValidationError("[grid] n must be integers >= 2");
        if (!(half[i] > 0.0))
            throw ValidationError("[grid] half must be positive");
        axes.push_back(Axis::from_bounds(center[i] - half[i], center[i] + half[i], static_cast<std::size_t>(n[i])));
    }
    return Grid(std::move(axes));
}

json rational_json(const Rational& r) { return json{{"exact", to_string(r)}, {"value", to_double(r)}}; }

json exponents_json(const AnisoExponents& e)
{
    json p = json::array(), ai = json::array();
    for (const auto& q : e.p)
        p.push_back(to_string(q));
    for (const auto& a : e.alpha_i)
        ai.push_back(rational_json(a));
    return json{{"N", e.dim()},
                {"p", p},
                {"pbar", rational_json(e.pbar)},
                {"pstar", e.pstar ? rational_json(*e.pstar) : json("undefined")},
                {"lambda", rational_json(e.lambda)},
                {"alpha", rational_json(e.alpha)},
                {"alpha_i", ai},
                {"warnings", e.warnings}};
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path);
    if (!f)
        throw ValidationError("cannot write '" + path + "'");
    return f;
}

void write_field(const std::string& path, const SpaceTimeField& f)
{
    auto out = open_out(path);
    write_field_csv(out, f);
}

void write_field(const std::string& path, const GridField& f, double t = 0.0)
{
    auto out = open_out(path);
    write_field_csv(out, f, t);
}

std::string fmt(double v) { return format_double(v); }

SpaceTimeField load_space_time(const std::string& path)
{
    const FieldFile f = read_field_csv(path);
    if (!f.is_space_time())
        throw ValidationError("'" + path + "' holds a single time level; a space-time field is required");
    return f.space_time();
}

// ---------------------------------------------------------------------------
// Initial data and the solver

GridField initial_data(const Config& cfg, const Grid& g, std::uint64_t seed)
{
    const std::string kind = cfg.text("initial", "kind", "bump");
    const double amp = cfg.number("initial", "amplitude", 1.0);
    const double base = cfg.number("initial", "base", 0.0);
    const double radius = cfg.number("initial", "radius", 1.0);
    const double width = cfg.number("initial", "width", 0.5);
    if (!(radius > 0.0) || !(width > 0.0))
        throw ValidationError("[initial] radius and width must be positive");
    if (kind == "bump") {
        return GridField::sample(g, [&](std::span<const double> x) {
            double v = 1.0;
            for (double xi : x) {
                const double s = std::max(0.0, 1.0 - (xi / radius) * (xi / radius));
                v *= s * s;
            }
            return base + amp * v;
        });
    }
    if (kind == "gaussian") {
        return GridField::sample(g, [&](std::span<const double> x) {
            double r2 = 0.0;
            for (double xi : x)
                r2 += xi * xi;
            return base + amp * std::exp(-0.5 * r2 / (width * width));
        });
    }
    if (kind == "constant")
        return GridField(g, base + amp);
    if (kind == "step")
        return GridField::sample(g, [&](std::span<const double> x) { return x[0] > 0.0 ? base + amp : base; });
    if (kind == "random") {
        std::mt19937_64 rng(seed);
        GridField f(g);
        for (double& v : f.values)
            v = base + amp * std::generate_canonical<double, 53>(rng);
        return f;
    }
    if (kind == "file") {
        const std::string file = cfg.text("initial", "file", "");
        if (file.empty())
            throw ValidationError("[initial] kind = \"file\" needs file = \"...\"");
        return read_field_csv(file).level(0);
    }
    throw ValidationError("[initial] kind must be one of bump, gaussian, constant, step, random, file; got '" + kind +
                          "'");
}

SolverConfig solver_config(const Config& cfg, const AnisoExponents& e, int threads)
{
    SolverConfig s;
    s.exps = e;
    s.t0 = cfg.number("solver", "t0", 0.0);
    s.t_end = cfg.number("solver", "t_end", 0.1);
    s.output_dt = cfg.number("solver", "output_dt", (s.t_end - s.t0) / 20.0);
    s.cfl_safety = cfg.number("solver", "cfl_safety", s.cfl_safety);
    s.eps_reg = cfg.number("solver", "eps_reg", s.eps_reg);
    s.dt_max = cfg.number("solver", "dt_max", s.dt_max);
    s.fixed_dt = cfg.number("solver", "fixed_dt", s.fixed_dt);
    s.threads = threads;
    const std::string bc = cfg.text("solver", "bc", "zero_flux");
    if (bc == "dirichlet") {
        const double value = cfg.number("solver", "boundary_value", 0.0);
        s.bc = BoundaryKind::dirichlet;
        s.dirichlet = [value](std::span<const double>, double) { return value; };
    } else if (bc != "zero_flux") {
        throw ValidationError("[solver] bc must be \"zero_flux\" or \"dirichlet\"");
    }
    s.validate();
    return s;
}

json solve_report_json(const SolveReport& r, const SolverConfig& s)
{
    return json{{"scheme", r.scheme},
                {"bc", to_string(s.bc)},
                {"cfl_safety", s.cfl_safety},
                {"eps_reg", s.eps_reg},
                {"t0", s.t0},
                {"t_end", s.t_end},
                {"output_dt", s.output_dt},
                {"steps", r.steps},
                {"dt_min", r.dt_min},
                {"dt_max", r.dt_max},
                {"steps_per_level", r.steps_per_level},
                {"mass_initial", r.mass_initial},
                {"mass_final", r.mass_final},
                {"mass_drift", r.mass_drift},
                {"runtime_s", r.runtime_s}};
}

// A field for the analysis subcommands: --field if given, else a fresh solve.
SpaceTimeField input_field(const Config& cfg, const AnisoExponents& e, const CommonOptions& opt,
                           const std::string& field_path, json& result)
{
    if (!field_path.empty()) {
        result["field"] = field_path;
        return load_space_time(field_path);
    }
    const Grid g = load_grid(cfg, e.dim());
    const SolverConfig s = solver_config(cfg, e, opt.threads);
    auto run = solve(initial_data(cfg, g, opt.seed), s);
    result["field"] = "solved from config";
    result["solve"] = solve_report_json(run.report, s);
    return std::move(run.field);
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns the exit status and fills `result`.

int cmd_params(const Config& cfg, const CommonOptions& opt, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    auto csv = open_out(opt.out + "_exponents.csv");
    csv << "i,p_i,alpha_i\n";
    for (std::size_t i = 0; i < e.dim(); ++i)
        csv << i + 1 << ',' << to_string(e.p[i]) << ',' << to_string(e.alpha_i[i]) << '\n';
    result["exponents"] = exponents_json(e);
    result["alpha_sum_equals_alpha"] = alpha_sum(e) == e.alpha;
    result["outputs"] = {opt.out + "_exponents.csv"};
    return 0;
}

int cmd_solve(const Config& cfg, const CommonOptions& opt, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const Grid g = load_grid(cfg, e.dim());
    const SolverConfig s = solver_config(cfg, e, opt.threads);
    const auto run = solve(initial_data(cfg, g, opt.seed), s);
    const std::string path = opt.out + "_field.csv";
    write_field(path, run.field);
    json outputs = {path};
    if (cfg.flag("solver", "snapshots", false)) {
        for (std::size_t l = 0; l < run.field.levels; ++l) {
            char name[32];
            std::snprintf(name, sizeof name, "_level_%04zu.csv", l);
            const auto lv = run.field.level(l);
            write_field(opt.out + name, GridField(run.field.grid, std::vector<double>(lv.begin(), lv.end())),
                        run.field.time(l));
            outputs.push_back(opt.out + name);
        }
    }
    result["exponents"] = exponents_json(e);
    result["solve"] = solve_report_json(run.report, s);
    result["levels"] = run.field.levels;
    result["outputs"] = outputs;
    return 0;
}

int cmd_scale(const Config& cfg, const CommonOptions& opt, const std::string& map_flag, std::optional<double> rho_flag,
              std::optional<double> m_flag, const std::string& in, const std::string& out_path, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const std::string map = map_flag.empty() ? cfg.text("scale", "map", "time-neutral") : map_flag;
    const double rho = rho_flag ? *rho_flag : cfg.number("scale", "rho", 1.0);
    const double m = m_flag ? *m_flag : cfg.number("scale", "M", 1.0);
    if (in.empty())
        throw ValidationError("scale needs --in FIELD.csv");
    std::optional<ScalingMap> s;
    if (map == "time-neutral")
        s = make_time_neutral(rho, m, e);
    else if (map == "intrinsic")
        s = make_intrinsic(rho, m, e);
    else if (map == "mass")
        s = make_mass_preserving(rho, e);
    else
        throw ValidationError("--map must be time-neutral, intrinsic or mass; got '" + map + "'");

    const FieldFile f = read_field_csv(in);
    json factors = s->space_factors();
    if (f.is_space_time()) {
        const SpaceTimeField u = f.space_time();
        const auto v = apply_scaling(u, *s, std::nullopt, opt.threads);
        write_field(out_path, v);
        result["mass_first_level"] = {{"before", integrate(GridField(u.grid, std::vector<double>(u.level(0).begin(), u.level(0).end())))},
                                      {"after", integrate(GridField(v.grid, std::vector<double>(v.level(0).begin(), v.level(0).end())))}};
    } else {
        const GridField u = f.level(0);
        const auto v = apply_scaling(u, *s);
        write_field(out_path, v, f.t0 / s->time_factor());
        result["mass"] = {{"before", integrate(u)}, {"after", integrate(v)}};
    }
    result["map"] = {{"family", to_string(s->family())},
                     {"rho", rho},
                     {"M", s->mu()},
                     {"amplitude", s->amplitude()},
                     {"time_factor", s->time_factor()},
                     {"space_factors", factors},
                     {"homogeneity_exact", s->homogeneity_exact()}};
    result["outputs"] = {out_path};
    return 0;
}

int cmd_barenblatt(const Config& cfg, const CommonOptions& opt, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const Grid g = load_grid(cfg, e.dim(), 64, 4.0);
    FpConfig fc;
    fc.tol = cfg.number("fokker_planck", "tol", fc.tol);
    fc.max_steps = cfg.count("fokker_planck", "max_steps", fc.max_steps);
    fc.cfl_safety = cfg.number("fokker_planck", "cfl_safety", fc.cfl_safety);
    fc.eps_reg = cfg.number("fokker_planck", "eps_reg", fc.eps_reg);
    fc.history_every = cfg.count("fokker_planck", "history_every", fc.history_every);
    fc.threads = opt.threads;
    fc.validate();
    const double radius = cfg.number("fokker_planck", "radius", 1.0);
    const double threshold = cfg.number("fokker_planck", "support_threshold", 1e-4);

    const FpResult r = fp_solve_steady(default_fp_initial(g, radius), e, fc);
    write_field(opt.out + "_steady.csv", r.w);
    {
        auto hist = open_out(opt.out + "_history.csv");
        hist << "step,time,rate,mass\n";
        for (const auto& h : r.history)
            hist << h.step << ',' << fmt(h.time) << ',' << fmt(h.rate) << ',' << fmt(h.mass) << '\n';
    }
    json outputs = {opt.out + "_steady.csv", opt.out + "_history.csv"};
    result["exponents"] = exponents_json(e);
    result["fokker_planck"] = {{"boundary", "zero-flux truncation of the drift-diffusion flux"},
                               {"converged", r.converged},
                               {"steps", r.steps},
                               {"time", r.time},
                               {"rate", r.rate},
                               {"tol", fc.tol},
                               {"mass_initial", r.mass_initial},
                               {"mass_final", r.mass_final},
                               {"mass_drift", r.mass_drift},
                               {"support_radius", support_radius(r.w, threshold)},
                               {"support_threshold", threshold},
                               {"touches_wall", r.touches_wall},
                               {"runtime_s", r.runtime_s}};

    if (const toml::node* fam = cfg.node("fokker_planck", "family")) {
        const toml::table* t = fam->as_table();
        if (!t)
            throw ValidationError("[fokker_planck] family must be a table {t0, dt, levels}");
        auto get = [&](const char* key, double fallback) {
            const toml::node* n = t->get(key);
            return n ? n->value<double>().value_or(fallback) : fallback;
        };
        const double t0 = get("t0", 1.0), dt = get("dt", 0.0625);
        const auto levels = static_cast<std::size_t>(get("levels", 65));
        const auto family = barenblatt_family(r.w, e, g, t0, dt, levels);
        write_field(opt.out + "_family.csv", family);
        outputs.push_back(opt.out + "_family.csv");
        result["family"] = {{"t0", t0},
                            {"dt", dt},
                            {"levels", levels},
                            {"self_similarity_residual",
                             {{"rho=1/2", self_similarity_residual(family, 0.5, e)},
                              {"rho=2", self_similarity_residual(family, 2.0, e)}}}};
    }
    result["outputs"] = outputs;
    if (!r.converged) {
        result["error"] = "steady state not reached: rate " + fmt(r.rate) + " after " + std::to_string(r.steps) +
                          " steps (tol " + fmt(fc.tol) + ")";
        return 1;
    }
    return 0;
}

SpaceTimeBox cfg_box(const Config& cfg, const std::string& sec, const char* half_key, const char* time_key,
                     const std::vector<double>& center, std::vector<double> half, std::vector<double> t)
{
    SpaceTimeBox b;
    b.center = center;
    b.half = cfg.numbers(sec, half_key, center.size(), std::move(half));
    const auto tt = cfg.numbers(sec, time_key, 0, std::move(t));
    if (tt.size() != 2 || !(tt[1] > tt[0]))
        throw ValidationError("[" + sec + "] " + time_key + " must be [t_lo, t_hi] with t_lo < t_hi");
    b.t_lo = tt[0];
    b.t_hi = tt[1];
    b.hi_closed = true;
    return b;
}

int cmd_energy(const Config& cfg, const CommonOptions& opt, const std::string& field_path, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const SpaceTimeField u = input_field(cfg, e, opt, field_path, result);
    const SpaceTimeBox dom = domain_box(u);
    const std::size_t n = e.dim();
    const auto center = cfg.numbers("energy", "center", n, dom.center);
    std::vector<double> outer_half(n), inner_half(n);
    for (std::size_t i = 0; i < n; ++i) {
        outer_half[i] = 0.8 * dom.half[i];
        inner_half[i] = 0.4 * dom.half[i];
    }
    const double t_mid = 0.5 * (u.t0 + u.t_last());
    CutoffSpec spec;
    spec.outer = cfg_box(cfg, "energy", "outer_half", "t_outer", center, outer_half, {u.t0, u.t_last()});
    spec.inner = cfg_box(cfg, "energy", "inner_half", "t_inner", center, inner_half, {t_mid, u.t_last()});
    const auto window = cfg.numbers("energy", "window", 0, {spec.outer.t_lo, spec.outer.t_hi});
    if (window.size() != 2)
        throw ValidationError("[energy] window must be [s, t]");

    std::vector<double> levels;
    if (auto lv = cfg.numbers("energy", "levels", 0)) {
        levels = *lv;
    } else {
        double lo = u.values.front(), hi = lo;
        for (double v : u.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (int j = 1; j <= 5; ++j)
            levels.push_back(lo + (hi - lo) * j / 6.0);
    }
    const std::string sign = cfg.text("energy", "sign", "both");
    std::vector<Sign> signs;
    if (sign == "plus" || sign == "both")
        signs.push_back(Sign::plus);
    if (sign == "minus" || sign == "both")
        signs.push_back(Sign::minus);
    if (signs.empty())
        throw ValidationError("[energy] sign must be plus, minus or both");

    std::vector<EnergySides> all;
    auto csv = open_out(opt.out + "_energy.csv");
    csv << "n,k,sign,lhs,rhs,ratio,lhs_sup,rhs_time\n";
    std::size_t idx = 0;
    for (Sign s : signs) {
        for (double k : levels) {
            const auto r = energy_sides(u, k, s, spec, e, window[0], window[1]);
            all.push_back(r);
            csv << idx++ << ',' << fmt(k) << ',' << (s == Sign::plus ? "plus" : "minus") << ',' << fmt(r.lhs) << ','
                << fmt(r.rhs) << ',' << fmt(r.ratio) << ',' << fmt(r.lhs_sup) << ',' << fmt(r.rhs_time) << '\n';
        }
    }
    const double gamma = fit_energy_constant(all);
    const Monomial m = energy_scaling_exponent(e);
    result["exponents"] = exponents_json(e);
    result["energy"] = {{"combinations", all.size()},
                        {"fitted_constant", gamma},
                        {"verdict", "lhs <= Gamma * rhs holds for every combination with Gamma = " + fmt(gamma)},
                        {"scaling_exponent", {{"rho", to_string(m.rho_exp)}, {"M", to_string(m.m_exp)}}},
                        {"sup_over", "stored time levels"},
                        {"differences", "forward"}};
    result["outputs"] = {opt.out + "_energy.csv"};
    return 0;
}

DeGiorgiParams degiorgi_params(const Config& cfg, std::size_t dim)
{
    DeGiorgiParams p;
    const std::string side = cfg.text("degiorgi", "side", "minus");
    if (side == "minus")
        p.side = Sign::minus;
    else if (side == "plus")
        p.side = Sign::plus;
    else
        throw ValidationError("[degiorgi] side must be \"minus\" or \"plus\"");
    p.mu = cfg.number("degiorgi", "mu", p.mu);
    p.omega = cfg.number("degiorgi", "omega", p.omega);
    p.xi = cfg.number("degiorgi", "xi", p.xi);
    p.a = cfg.number("degiorgi", "a", p.a);
    p.theta = cfg.number("degiorgi", "theta", p.theta);
    p.rho = cfg.number("degiorgi", "rho", p.rho);
    p.gamma = cfg.number("degiorgi", "gamma", p.gamma);
    p.center = cfg.numbers("degiorgi", "center", dim, std::vector<double>(dim, 0.0));
    p.t0 = cfg.number("degiorgi", "t0", p.t0);
    const std::string o = cfg.text("degiorgi", "orientation", "backward");
    if (o == "backward")
        p.orientation = Orientation::backward;
    else if (o == "forward")
        p.orientation = Orientation::forward;
    else if (o == "full")
        p.orientation = Orientation::full;
    else
        throw ValidationError("[degiorgi] orientation must be backward, forward or full");
    p.validate(dim);
    return p;
}

int cmd_degiorgi(const Config& cfg, const CommonOptions& opt, const std::string& field_path, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const DeGiorgiParams p = degiorgi_params(cfg, e.dim());
    const std::size_t n_max = cfg.count("degiorgi", "n_max", 20);
    const SpaceTimeField u = input_field(cfg, e, opt, field_path, result);

    const DeGiorgiTrace tr = degiorgi_trace(u, p, e, n_max);
    auto csv = open_out(opt.out + "_trace.csv");
    csv << "n,xi_n,k_n,rho_n,volume,measure,Y_n\n";
    for (std::size_t j = 0; j < tr.y.size(); ++j) {
        const auto& lv = tr.schedule.levels[j];
        csv << lv.n << ',' << fmt(lv.xi_n) << ',' << fmt(lv.k_n) << ',' << fmt(lv.rho_n) << ',' << fmt(lv.volume)
            << ',' << fmt(tr.measure[j]) << ',' << fmt(tr.y[j]) << '\n';
    }
    const CriticalMassReport cm = verify_critical_mass(u, p, e);

    json geometric = nullptr;
    if (!tr.y.empty() && tr.y.front() <= 1.0) {
        const double c = std::max(1.0, tr.fitted_constant);
        const auto g = fast_geometric_iterate(tr.y.front(), c, tr.b, tr.delta);
        geometric = {{"C", c},
                     {"threshold", g.threshold},
                     {"y0_below_threshold", tr.y.front() <= g.threshold},
                     {"converged", g.converged},
                     {"n_converged", g.n_converged}};
    }
    result["exponents"] = exponents_json(e);
    result["degiorgi"] = {{"side", p.side == Sign::minus ? "minus" : "plus"},
                          {"orientation", to_string(p.orientation)},
                          {"n_bar", tr.schedule.n_bar},
                          {"k_limit", tr.schedule.k_limit},
                          {"b", tr.b},
                          {"delta", tr.delta},
                          {"fitted_constant", tr.fitted_constant},
                          {"trace_reaches_zero", tr.converged},
                          {"gamma", p.gamma},
                          {"gamma_placement", "outside the (N+pbar)/N power"},
                          {"nu_star", nu_star(e, p.theta, p.xi * p.omega, p.a, p.gamma)},
                          {"geometric_iteration", geometric}};
    result["critical_mass"] = {{"gamma", cm.gamma},
                               {"nu", cm.nu},
                               {"hypothesis_ratio", cm.hypothesis_ratio},
                               {"hypothesis_holds", cm.hypothesis_holds},
                               {"level", cm.level},
                               {"extreme", cm.extreme},
                               {"conclusion_holds", cm.conclusion_holds},
                               {"margin", cm.margin},
                               {"verdict", cm.verdict}};
    result["outputs"] = {opt.out + "_trace.csv"};
    return 0;
}

int cmd_lsc(const Config& cfg, const CommonOptions& opt, const std::string& field_path, json& result)
{
    const AnisoExponents e = load_exponents(cfg, opt);
    const SpaceTimeField u = input_field(cfg, e, opt, field_path, result);
    LscParams prm;
    prm.rho0 = cfg.number("lsc", "rho0", prm.rho0);
    if (auto seq = cfg.numbers("lsc", "rho_sequence", 0))
        prm.rho_sequence = *seq;
    prm.b = cfg.number("lsc", "b", prm.b);
    prm.r = cfg.number("lsc", "r", prm.r);
    prm.a = cfg.number("lsc", "a", prm.a);
    prm.gamma = cfg.number("lsc", "gamma", prm.gamma);
    prm.max_samples = cfg.count("lsc", "max_samples", prm.max_samples);
    prm.triangle_samples = cfg.count("lsc", "triangle_samples", prm.triangle_samples);
    prm.seed = opt.seed;
    const std::size_t defect_samples = cfg.count("lsc", "defect_samples", 8);

    const LscReport rep = verify_lsc_theorem(u, e, prm);
    const SpaceTimeField us = lsc_regularize(u, rep.rho_sequence, e);
    write_field(opt.out + "_ustar.csv", us);

    // Defects at the gap nodes first, then at seeded random interior nodes.
    std::vector<std::pair<std::size_t, std::size_t>> nodes;
    for (const auto& gp : rep.gaps)
        if (nodes.size() < defect_samples)
            nodes.emplace_back(gp.node, gp.level);
    std::mt19937_64 rng(opt.seed);
    for (std::size_t tries = 0; nodes.size() < defect_samples && tries < 100 * defect_samples + 100; ++tries) {
        const std::size_t k = static_cast<std::size_t>(rng() % u.grid.size());
        const std::size_t l = static_cast<std::size_t>(rng() % u.levels);
        if (!u.grid.on_boundary(k) && l > 0 && l + 1 < u.levels)
            nodes.emplace_back(k, l);
    }
    auto csv = open_out(opt.out + "_defects.csv");
    csv << "node,level,rho,defect,count,truncated\n";
    for (auto [k, l] : nodes)
        for (const auto& d : lebesgue_defect(u, k, l, rep.rho_sequence, e))
            csv << k << ',' << l << ',' << fmt(d.rho) << ',' << fmt(d.defect) << ',' << d.count << ','
                << (d.truncated ? 1 : 0) << '\n';

    json gaps = json::array();
    for (const auto& gp : rep.gaps)
        gaps.push_back({{"node", gp.node},
                        {"level", gp.level},
                        {"u", gp.u},
                        {"u_star", gp.u_star},
                        {"mu_minus", gp.mu_minus},
                        {"best_ratio", gp.best_ratio},
                        {"triggered", gp.triggered}});
    result["exponents"] = exponents_json(e);
    result["lsc"] = {{"rho_sequence", rep.rho_sequence},
                     {"interior_nodes", rep.interior_nodes},
                     {"equal_nodes", rep.equal_nodes},
                     {"equality_fraction", rep.equality_fraction},
                     {"below_everywhere", rep.below_everywhere},
                     {"nu", rep.nu},
                     {"gap_nodes", rep.gap_nodes},
                     {"gaps", gaps},
                     {"doubling",
                      {{"exact", rep.doubling.exact},
                       {"measured", rep.doubling.measured},
                       {"relative_error", rep.doubling.relative_error},
                       {"tolerance", rep.doubling.tolerance},
                       {"within", rep.doubling.within}}},
                     {"worst_triangle_ratio", rep.worst_triangle_ratio},
                     {"note", rep.note}};
    result["outputs"] = {opt.out + "_ustar.csv", opt.out + "_defects.csv"};
    return 0;
}

void add_common(CLI::App* sub, CommonOptions& opt)
{
    sub->add_option("--config", opt.config, "TOML run configuration");
    sub->add_option("--out", opt.out, "output prefix (scale: output field path)");
    sub->add_option("--seed", opt.seed, "seed for randomized choices");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--p", opt.p, "exponents, comma separated, e.g. 3,7/2 (overrides [problem] p)");
}

std::string report_path(const std::string& subcommand, const std::string& out)
{
    if (subcommand == "scale" && out.size() > 4 && out.compare(out.size() - 4, 4, ".csv") == 0)
        return out.substr(0, out.size() - 4) + "_report.json";
    return out + "_report.json";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical lab for the anisotropic p-Laplacian evolution equation", "aniso_lab"};
    app.set_version_flag("--version", std::string("aniso-lab ") + kVersion);
    app.require_subcommand(1);

    CommonOptions opt;
    std::string field, map, in;
    std::optional<double> rho, m;

    auto* params = app.add_subcommand("params", "exponent table and summary");
    auto* solve_cmd = app.add_subcommand("solve", "explicit solve of the evolution equation");
    auto* scale = app.add_subcommand("scale", "apply a scaling map to a field");
    auto* barenblatt = app.add_subcommand("barenblatt", "Fokker-Planck steady state and Barenblatt family");
    auto* energy = app.add_subcommand("energy-check", "both sides of the energy estimate");
    auto* degiorgi = app.add_subcommand("degiorgi", "level schedule, Y_n trace and critical mass verdict");
    auto* lsc = app.add_subcommand("lsc", "lower semicontinuous regularization report");
    for (auto* s : {params, solve_cmd, scale, barenblatt, energy, degiorgi, lsc})
        add_common(s, opt);
    scale->add_option("--map", map, "time-neutral, intrinsic or mass");
    scale->add_option("--rho", rho, "radius parameter");
    scale->add_option("--M", m, "intrinsic parameter");
    scale->add_option("--in", in, "input field CSV");
    for (auto* s : {energy, degiorgi, lsc})
        s->add_option("--field", field, "input field CSV (default: solve from the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "aniso_lab: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    json report;
    report["tool"] = "aniso_lab";
    report["version"] = std::string("aniso-lab ") + kVersion;
    report["versions"] = {{"aniso_lab", kVersion},
                          {"cxx_standard", static_cast<long>(__cplusplus)},
                          {"compiler", __VERSION__},
                          {"nlohmann_json",
                           std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"toml++", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                                         std::to_string(TOML_LIB_PATCH)},
                          {"cli11", CLI11_VERSION}};
    report["subcommand"] = name;
    report["arguments"] = std::vector<std::string>(argv + 1, argv + argc);
    report["seed"] = opt.seed;
    report["threads"] = opt.threads;

    int status = 0;
    json result;
    const auto start = std::chrono::steady_clock::now();
    try {
        const Config cfg = Config::load(opt.config);
        report["config_file"] = opt.config;
        report["config"] = cfg.echo();
        if (name == "params")
            status = cmd_params(cfg, opt, result);
        else if (name == "solve")
            status = cmd_solve(cfg, opt, result);
        else if (name == "scale")
            status = cmd_scale(cfg, opt, map, rho, m, in, opt.out, result);
        else if (name == "barenblatt")
            status = cmd_barenblatt(cfg, opt, result);
        else if (name == "energy-check")
            status = cmd_energy(cfg, opt, field, result);
        else if (name == "degiorgi")
            status = cmd_degiorgi(cfg, opt, field, result);
        else
            status = cmd_lsc(cfg, opt, field, result);
    } catch (const NumericalError& e) {
        status = 1;
        result["error"] = e.what();
    } catch (const Error& e) {
        status = 2;
        result["error"] = e.what();
    } catch (const std::exception& e) {
        status = 2;
        result["error"] = e.what();
    }
    report["result"] = result;
    report["status"] = status == 0 ? "ok" : "error";
    report["exit_code"] = status;
    report["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string rpath = report_path(name, opt.out);
    std::ofstream rf(rpath);
    if (rf)
        rf << report.dump(2) << '\n';
    else
        std::cerr << "aniso_lab: cannot write report '" << rpath << "'\n";
    if (status != 0)
        std::cerr << "aniso_lab " << name << ": error: " << result.value("error", std::string("failed")) << '\n';
    return status;
}
