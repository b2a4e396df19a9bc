#include "dgpe/config.hpp"

#include "dgpe/regimes.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace dgpe {

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError([&] {
          std::string msg = "invalid config:";
          for (const auto& e : errors) msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors)) {}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) throw std::string("expected a number, got '") + std::string(s) + "'";
    if (!std::isfinite(v)) throw std::string("value must be finite");
    return v;
}

template <class I>
I to_int(std::string_view s) {
    s = trim(s);
    I v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) throw std::string("expected an integer, got '") + std::string(s) + "'";
    return v;
}

bool to_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::string("expected true or false, got '") + std::string(s) + "'";
}

template <class F>
auto to_list(std::string_view s, F conv) {
    std::vector<decltype(conv(s))> out;
    s = trim(s);
    if (s.empty()) return out;
    while (true) {
        const auto c = s.find(',');
        out.push_back(conv(s.substr(0, c)));
        if (c == std::string_view::npos) break;
        s.remove_prefix(c + 1);
    }
    return out;
}

std::string to_string_value(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

const char* init_name(InitKind k) {
    switch (k) {
        case InitKind::GroundState: return "ground_state";
        case InitKind::Gaussian: return "gaussian";
        case InitKind::Unstable: return "unstable";
        case InitKind::File: return "file";
    }
    return "?";
}

InitKind to_init(std::string_view s) {
    s = trim(s);
    for (auto k : {InitKind::GroundState, InitKind::Gaussian, InitKind::Unstable, InitKind::File})
        if (s == init_name(k)) return k;
    throw std::string("expected ground_state, gaussian, unstable or file, got '") + std::string(s) + "'";
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
    bool required = false;
};

#define DOUBLE(k, m) Field{k, [](RunConfig& c, std::string_view v) { c.m = to_double(v); }, [](const RunConfig& c) { return fmt(c.m); }}
#define DLIST(k, m) Field{k, [](RunConfig& c, std::string_view v) { c.m = to_list(v, to_double); }, [](const RunConfig& c) { return join(c.m); }}
#define STRING(k, m) Field{k, [](RunConfig& c, std::string_view v) { c.m = to_string_value(v); }, [](const RunConfig& c) { return c.m; }}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        {"grid.dim", [](RunConfig& c, std::string_view v) { c.dim = to_int<int>(v); },
         [](const RunConfig& c) { return std::to_string(c.dim); }},
        {"grid.extents", [](RunConfig& c, std::string_view v) { c.extents = to_list(v, to_double); },
         [](const RunConfig& c) { return join(c.extents); }, true},
        {"grid.points", [](RunConfig& c, std::string_view v) { c.points = to_list(v, to_int<int>); },
         [](const RunConfig& c) { return join(c.points); }, true},
        DLIST("params.omega", params.omega),
        Field{"params.lambda1", [](RunConfig& c, std::string_view v) { c.params.lambda1 = to_double(v); },
              [](const RunConfig& c) { return fmt(c.params.lambda1); }, true},
        Field{"params.lambda2", [](RunConfig& c, std::string_view v) { c.params.lambda2 = to_double(v); },
              [](const RunConfig& c) { return fmt(c.params.lambda2); }, true},
        {"init.kind", [](RunConfig& c, std::string_view v) { c.init.kind = to_init(v); },
         [](const RunConfig& c) { return std::string(init_name(c.init.kind)); }},
        DLIST("init.widths", init.widths),
        DLIST("init.center", init.center),
        DOUBLE("init.beta", init.beta),
        DOUBLE("init.mass", init.mass),
        DOUBLE("init.eps", init.eps),
        DOUBLE("init.alpha", init.alpha),
        DOUBLE("init.f_width", init.f_width),
        DOUBLE("init.g_width", init.g_width),
        STRING("init.path", init.path),
        STRING("kernel.kind", kernel.kind),
        DLIST("kernel.omega", kernel.omega),
        DOUBLE("time.dt", dt),
        DOUBLE("time.T", T),
        {"monitor.stride", [](RunConfig& c, std::string_view v) { c.monitor.stride = to_int<std::size_t>(v); },
         [](const RunConfig& c) { return std::to_string(c.monitor.stride); }},
        DOUBLE("monitor.grad_factor", monitor.grad_factor),
        DOUBLE("monitor.grad_threshold", monitor.grad_threshold),
        DOUBLE("monitor.spectral_tail", monitor.spectral_tail),
        {"monitor.check_every_step", [](RunConfig& c, std::string_view v) { c.monitor.check_every_step = to_bool(v); },
         [](const RunConfig& c) { return std::string(c.monitor.check_every_step ? "true" : "false"); }},
        DOUBLE("classify.gn_constant", gn_constant),
        STRING("output.dir", output_dir),
        {"seed", [](RunConfig& c, std::string_view v) { c.seed = to_int<std::uint64_t>(v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        STRING("reduce.target", reduce.target),
        DLIST("reduce.eps", reduce.eps),
        {"reduce.samples", [](RunConfig& c, std::string_view v) { c.reduce.samples = to_int<int>(v); },
         [](const RunConfig& c) { return std::to_string(c.reduce.samples); }},
        {"reduce.allow_unstable", [](RunConfig& c, std::string_view v) { c.reduce.allow_unstable = to_bool(v); },
         [](const RunConfig& c) { return std::string(c.reduce.allow_unstable ? "true" : "false"); }},
        DOUBLE("reduce.u0.width", reduce.u0_width),
        DOUBLE("reduce.u0.center", reduce.u0_center),
        DOUBLE("reduce.u0.velocity", reduce.u0_velocity),
    };
    return fields;
}

#undef DOUBLE
#undef DLIST
#undef STRING

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::vector<std::string> errors;
    std::map<std::string, int, std::less<>> seen;
    auto err = [&](int line, const std::string& msg) {
        errors.push_back((line > 0 ? "line " + std::to_string(line) + ": " : std::string("config: ")) + msg);
    };

    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            err(lineno, "expected 'key = value'");
            continue;
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = line.substr(eq + 1);
        const auto& fields = schema();
        const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return key == f.key; });
        if (it == fields.end()) {
            err(lineno, "unknown key '" + std::string(key) + "'");
            continue;
        }
        if (const auto prev = seen.find(key); prev != seen.end()) {
            err(lineno, "duplicate key '" + std::string(key) + "' (first set on line " + std::to_string(prev->second) +
                            ", again on line " + std::to_string(lineno) + ")");
            continue;
        }
        seen.emplace(std::string(key), lineno);
        try {
            it->set(cfg, value);
        } catch (const std::string& e) {
            err(lineno, std::string(key) + ": " + e);
        }
    }

    for (const auto& f : schema())
        if (f.required && !seen.count(f.key)) err(0, std::string("missing required key '") + f.key + "'");

    auto line_of = [&](const char* key) {
        const auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second;
    };
    auto check = [&](bool ok, const char* key, const std::string& msg) {
        if (!ok) err(line_of(key), std::string(key) + ": " + msg);
    };

    if (!seen.count("grid.dim") && !cfg.points.empty()) cfg.dim = static_cast<int>(cfg.points.size());
    check(cfg.dim >= 1 && cfg.dim <= 3, "grid.dim", "must be 1, 2 or 3");
    const auto d = static_cast<std::size_t>(cfg.dim);
    cfg.params.dim = cfg.dim;
    if (seen.count("grid.extents")) check(cfg.extents.size() == d, "grid.extents", "needs one value per dimension");
    if (seen.count("grid.points")) check(cfg.points.size() == d, "grid.points", "needs one value per dimension");
    for (double l : cfg.extents) check(l > 0.0, "grid.extents", "extents must be positive");
    for (int n : cfg.points) check(n >= 8 && n % 2 == 0, "grid.points", "point counts must be even and >= 8");
    if (!seen.count("params.omega")) cfg.params.omega.assign(d, 1.0);
    check(cfg.params.omega.size() == d, "params.omega", "needs one value per dimension");
    for (double w : cfg.params.omega) check(w >= 0.0, "params.omega", "trap frequencies must be >= 0");
    if (cfg.init.kind == InitKind::Gaussian) {
        check(cfg.init.widths.empty() || cfg.init.widths.size() == d, "init.widths", "needs one value per dimension");
        check(cfg.init.center.empty() || cfg.init.center.size() == d, "init.center", "needs one value per dimension");
        for (double w : cfg.init.widths) check(w > 0.0, "init.widths", "widths must be positive");
        check(cfg.init.mass > 0.0, "init.mass", "must be positive");
    }
    if (cfg.init.kind == InitKind::Unstable) {
        check(cfg.dim == 3, "init.kind", "unstable data is three-dimensional");
        check(cfg.init.eps > 0.0, "init.eps", "must be positive");
        check(cfg.init.f_width > 0.0 && cfg.init.g_width > 0.0, "init.f_width", "widths must be positive");
    }
    if (cfg.init.kind == InitKind::File) check(!cfg.init.path.empty(), "init.path", "required for init.kind = file");
    check(cfg.kernel.kind == "auto" || cfg.kernel.kind == "analytic3d" || cfg.kernel.kind == "effective1d" ||
              cfg.kernel.kind == "effective2d",
          "kernel.kind", "expected auto, analytic3d, effective1d or effective2d");
    for (double w : cfg.kernel.omega) check(w > 0.0, "kernel.omega", "frequencies must be positive");
    check(cfg.dt > 0.0, "time.dt", "must be positive");
    check(cfg.T > 0.0, "time.T", "must be positive");
    check(cfg.monitor.stride >= 1, "monitor.stride", "must be >= 1");
    check(cfg.monitor.grad_factor > 1.0, "monitor.grad_factor", "must exceed 1");
    check(cfg.monitor.grad_threshold >= 0.0, "monitor.grad_threshold", "must be >= 0");
    check(cfg.monitor.spectral_tail > 0.0 && cfg.monitor.spectral_tail < 1.0, "monitor.spectral_tail",
          "must lie in (0, 1)");
    check(cfg.gn_constant > 0.0, "classify.gn_constant", "must be positive");
    check(cfg.reduce.target == "line1d" || cfg.reduce.target == "plane2d", "reduce.target",
          "expected line1d or plane2d");
    check(!cfg.reduce.eps.empty(), "reduce.eps", "needs at least one value");
    for (double e : cfg.reduce.eps) check(e > 0.0, "reduce.eps", "values must be positive");
    check(cfg.reduce.samples >= 1, "reduce.samples", "must be >= 1");
    check(cfg.reduce.u0_width > 0.0, "reduce.u0.width", "must be positive");

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : schema()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
    return out;
}

GridPtr make_grid(const RunConfig& cfg) { return SpectralGrid::make(cfg.dim, cfg.extents, cfg.points); }

KernelProvenance kernel_provenance(const RunConfig& cfg) {
    std::string kind = cfg.kernel.kind;
    if (kind == "auto") kind = cfg.dim == 3 ? "analytic3d" : cfg.dim == 1 ? "effective1d" : "effective2d";
    auto omega = [&](std::size_t i) { return i < cfg.kernel.omega.size() ? cfg.kernel.omega[i] : 1.0; };
    if (kind == "analytic3d") return KernelProvenance::analytic3d();
    if (kind == "effective1d") return KernelProvenance::effective1d(omega(0), omega(1));
    return KernelProvenance::effective2d(omega(0));
}

WaveField make_initial_state(const RunConfig& cfg, const GridPtr& grid) {
    switch (cfg.init.kind) {
        case InitKind::GroundState: {
            std::vector<double> w = cfg.params.omega;
            for (double& v : w)
                if (v <= 0.0) v = 1.0;
            return linear_eigenstate(grid, w).field;
        }
        case InitKind::Gaussian: {
            const int d = grid->dim();
            WaveField psi(grid);
            std::array<int, 3> idx{};
            for (std::size_t f = 0; f < grid->size(); ++f) {
                grid->unflatten(f, idx);
                double e = 0.0, r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double w = cfg.init.widths.empty() ? 1.0 : cfg.init.widths[a];
                    const double c = cfg.init.center.empty() ? 0.0 : cfg.init.center[a];
                    const double x = grid->coords(a)[idx[a]] - c;
                    e += x * x / (2.0 * w * w);
                    r2 += x * x;
                }
                psi.values()[f] = std::polar(std::exp(-e), cfg.init.beta * r2);
            }
            const double scale = std::sqrt(cfg.init.mass / mass(psi));
            for (auto& v : psi.values()) v *= scale;
            return psi;
        }
        case InitKind::Unstable:
            return make_unstable_data(grid, cfg.init.eps, cfg.init.alpha, cfg.init.f_width, cfg.init.g_width);
        case InitKind::File: {
            WaveField psi = read_snapshot(cfg.init.path);
            if (!psi.g().same_shape(*grid))
                throw ValidationError("initial snapshot " + cfg.init.path + " does not match the configured grid");
            return WaveField(grid, psi.data(), psi.time());
        }
    }
    throw ValidationError("unknown initial data kind");
}

ReductionSetup make_reduction_setup(const RunConfig& cfg, const GridPtr& frame_grid) {
    if (frame_grid->dim() != 3) throw ValidationError("reduce: the grid must be three-dimensional");
    ReductionSetup s;
    const auto& w = cfg.params.omega;
    s.target = cfg.reduce.target == "line1d" ? ReductionTarget::Line1D : ReductionTarget::Plane2D;
    s.lambda1 = cfg.params.lambda1;
    s.lambda2 = cfg.params.lambda2;
    s.allow_unstable = cfg.reduce.allow_unstable;
    s.eps = cfg.reduce.eps.front();
    std::vector<int> kept;
    if (s.target == ReductionTarget::Line1D) {
        s.transverse_omega = {w[0], w[1]};
        s.longitudinal_omega = {w[2]};
        kept = {2};
    } else {
        s.transverse_omega = {w[2]};
        s.longitudinal_omega = {w[0], w[1]};
        kept = {0, 1};
    }
    std::vector<double> l;
    std::vector<int> n;
    for (int a : kept) {
        l.push_back(frame_grid->extent(a));
        n.push_back(frame_grid->points(a));
    }
    auto g = SpectralGrid::make(static_cast<int>(kept.size()), l, n);
    WaveField u(g);
    std::array<int, 3> idx{};
    const double wd = cfg.reduce.u0_width;
    for (std::size_t f = 0; f < g->size(); ++f) {
        g->unflatten(f, idx);
        double e = 0.0;
        for (int a = 0; a < g->dim(); ++a) {
            const double x = g->coords(a)[idx[a]] - cfg.reduce.u0_center;
            e += x * x / (2.0 * wd * wd);
        }
        const double x0 = g->coords(0)[idx[0]] - cfg.reduce.u0_center;
        u.values()[f] = std::polar(std::exp(-e), cfg.reduce.u0_velocity * x0);
    }
    const double scale = 1.0 / std::sqrt(mass(u));
    for (auto& v : u.values()) v *= scale;
    s.u0 = std::move(u);
    return s;
}

}  // namespace dgpe
