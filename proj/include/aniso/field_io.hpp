#ifndef ANISO_FIELD_IO_HPP
#define ANISO_FIELD_IO_HPP

// Field CSV files. The header line
//     # N=2 axes=64,64 h=0.0625,0.0625 t0=0 dt=0.01 levels=101 center=0,0
// is followed by one row per (level, node): coordinates..., time, value.
// Numbers are written with 17 significant digits, so a write/read cycle
// reproduces every double exactly.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

struct FieldFile
{
    Grid grid;
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t levels = 1;
    std::vector<double> values;

    bool is_space_time() const { return levels >= 2; }

    SpaceTimeField space_time() const
    {
        if (levels < 2)
            throw ValidationError("field file holds a single time level, a space-time field was expected");
        SpaceTimeField f(grid, t0, dt, levels);
        f.values = values;
        return f;
    }

    GridField level(std::size_t k = 0) const
    {
        if (k >= levels)
            throw ValidationError("field file level out of range");
        return GridField(grid, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(k * grid.size()),
                                                   values.begin() + static_cast<std::ptrdiff_t>((k + 1) * grid.size())));
    }
};

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + f(v[i]);
    return s;
}

inline void write_field_rows(std::ostream& out, const Grid& g, double t0, double dt, std::size_t levels,
                             std::span<const double> values)
{
    std::vector<std::string> h, c;
    std::vector<std::size_t> n;
    for (const auto& a : g.axes()) {
        h.push_back(format_double(a.h));
        c.push_back(format_double(a.center));
        n.push_back(a.n);
    }
    auto id = [](const std::string& s) { return s; };
    out << "# N=" << g.dim() << " axes=" << join(n, [](std::size_t v) { return std::to_string(v); })
        << " h=" << join(h, id) << " t0=" << format_double(t0) << " dt=" << format_double(dt) << " levels=" << levels
        << " center=" << join(c, id) << "\n";
    std::vector<double> x(g.dim());
    for (std::size_t l = 0; l < levels; ++l) {
        const std::string t = format_double(t0 + static_cast<double>(l) * dt);
        for (std::size_t k = 0; k < g.size(); ++k) {
            g.node(k, x);
            for (double xi : x)
                out << format_double(xi) << ',';
            out << t << ',' << format_double(values[l * g.size() + k]) << '\n';
        }
    }
}

inline double parse_double(const std::string& s, const char* what)
{
    // from_chars keeps subnormals, which stod rejects as out of range
    const char* first = s.data();
    const char* last = first + s.size();
    if (first != last && *first == '+')
        ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first)
        throw ValidationError(std::string("field csv: cannot parse ") + what + " '" + s + "'");
    if (ptr != last)
        throw ValidationError(std::string("field csv: trailing characters in ") + what + " '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    return out;
}

}  // namespace detail

inline void write_field_csv(std::ostream& out, const GridField& f, double t = 0.0)
{
    detail::write_field_rows(out, f.grid, t, 0.0, 1, f.values);
}

inline void write_field_csv(std::ostream& out, const SpaceTimeField& f)
{
    detail::write_field_rows(out, f.grid, f.t0, f.dt, f.levels, f.values);
}

inline FieldFile read_field_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw ValidationError("field csv: missing '# N=...' header line");
    std::map<std::string, std::string> kv;
    for (const auto& tok : detail::split(line.substr(2), ' ')) {
        if (tok.empty())
            continue;
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ValidationError("field csv: malformed header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* key : {"N", "axes", "h", "t0", "dt"})
        if (!kv.count(key))
            throw ValidationError(std::string("field csv: header lacks '") + key + "='");
    const std::size_t n = static_cast<std::size_t>(detail::parse_double(kv["N"], "N"));
    const auto sizes = detail::split(kv["axes"], ',');
    const auto hs = detail::split(kv["h"], ',');
    const auto cs = kv.count("center") ? detail::split(kv["center"], ',') : std::vector<std::string>(n, "0");
    if (sizes.size() != n || hs.size() != n || cs.size() != n)
        throw ValidationError("field csv: header lists do not match N");
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < n; ++i)
        axes.push_back(Axis{detail::parse_double(cs[i], "center"), detail::parse_double(hs[i], "h"),
                            static_cast<std::size_t>(detail::parse_double(sizes[i], "axes"))});
    FieldFile f;
    f.grid = Grid(std::move(axes));
    f.t0 = detail::parse_double(kv["t0"], "t0");
    f.dt = detail::parse_double(kv["dt"], "dt");
    f.levels = kv.count("levels") ? static_cast<std::size_t>(detail::parse_double(kv["levels"], "levels")) : 0;
    f.values.reserve(f.grid.size() * std::max<std::size_t>(f.levels, 1));
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto cols = detail::split(line, ',');
        if (cols.size() != n + 2)
            throw ValidationError("field csv: row " + std::to_string(row + 1) + " has " +
                                  std::to_string(cols.size()) + " columns, expected " + std::to_string(n + 2));
        f.values.push_back(detail::parse_double(cols.back(), "value"));
        ++row;
    }
    if (f.levels == 0)
        f.levels = f.values.size() / f.grid.size();
    if (f.values.size() != f.grid.size() * f.levels || f.levels == 0)
        throw ValidationError("field csv: " + std::to_string(f.values.size()) + " rows do not fill " +
                              std::to_string(f.levels) + " levels of " + std::to_string(f.grid.size()) + " nodes");
    return f;
}

inline FieldFile read_field_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open field file '" + path + "'");
    return read_field_csv(in);
}

}  // namespace aniso

#endif  // ANISO_FIELD_IO_HPP
