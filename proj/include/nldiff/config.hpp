#pragma once

#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/image.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/random.hpp"
#include "nldiff/stepper.hpp"

namespace nldiff {

using Knots = std::vector<std::pair<double, double>>;

struct GridSpec {
    bool given = false;
    int dim = 1;
    std::vector<Interval> extents;
    std::vector<std::size_t> counts;
    bool operator==(const GridSpec&) const = default;
};

struct KernelSpec {
    SpatialFamily family = SpatialFamily::gaussian;
    double radius = 0.1;
    std::string table;  // CSV path for custom_table
    bool operator==(const KernelSpec&) const = default;
};

struct RangeSpec {
    RangeFamily family = RangeFamily::linear;
    double p = 2.0;
    double h = 1.0;
    Knots exponent{{0.0, 2.0}};
    RangeFamily base = RangeFamily::p_laplacian;  // mollified only
    int n = 8;
    std::size_t quad_count = 256;
    bool operator==(const RangeSpec&) const = default;
};

struct ReactionSpec {
    ReactionFamily family = ReactionFamily::zero;
    double rate = 0.0;  // linear_decay lambda, logistic r
    double a = 0.0;
    double b = 0.0;
    double capacity = 1.0;
    double working_range = 2.0;
    Knots table{{0.0, 0.0}, {1.0, 0.0}};
    bool operator==(const ReactionSpec&) const = default;
};

enum class InitialKind { constant, random, step, bump, image, file };

struct InitialSpec {
    InitialKind kind = InitialKind::constant;
    double value = 0.5;
    double low = 0.0;
    double high = 1.0;
    double position = 0.5;
    double width = 0.1;
    std::string path;
    bool operator==(const InitialSpec&) const = default;
};

struct StudySpec {
    std::vector<int> levels{4, 8, 16, 32};
    std::vector<std::size_t> steps_list{512, 1024, 2048, 4096};
    double norm = 2.0;
    double offset = 0.1;
    double noise = 0.0;
    bool operator==(const StudySpec&) const = default;
};

struct OutputSpec {
    std::string dir = "out";
    bool write_fields = true;
    bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
    GridSpec grid;
    KernelSpec kernel;
    RangeSpec range;
    ReactionSpec reaction;
    InitialSpec initial;
    SolverConfig solver;
    StudySpec study;
    OutputSpec output;
    std::uint64_t seed = 42;
    // Directory relative paths are resolved against; not serialized.
    std::string base_dir = ".";

    bool operator==(const RunConfig& o) const {
        return grid == o.grid && kernel == o.kernel && range == o.range && reaction == o.reaction &&
               initial == o.initial && solver == o.solver && study == o.study && output == o.output &&
               seed == o.seed;
    }
};

namespace detail {

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

inline const std::vector<EnumName<SpatialFamily>>& spatial_names() {
    static const std::vector<EnumName<SpatialFamily>> v{
        {SpatialFamily::gaussian, "gaussian"}, {SpatialFamily::box, "box"}, {SpatialFamily::custom_table, "custom_table"}};
    return v;
}
inline const std::vector<EnumName<RangeFamily>>& range_names() {
    static const std::vector<EnumName<RangeFamily>> v{{RangeFamily::linear, "linear"},
                                                      {RangeFamily::p_laplacian, "p_laplacian"},
                                                      {RangeFamily::variable_exponent, "variable_exponent"},
                                                      {RangeFamily::spatial_exponent, "spatial_exponent"},
                                                      {RangeFamily::bilateral_gaussian, "bilateral_gaussian"},
                                                      {RangeFamily::mollified, "mollified"}};
    return v;
}
inline const std::vector<EnumName<ReactionFamily>>& reaction_names() {
    static const std::vector<EnumName<ReactionFamily>> v{{ReactionFamily::zero, "zero"},
                                                         {ReactionFamily::linear_decay, "linear_decay"},
                                                         {ReactionFamily::affine, "affine"},
                                                         {ReactionFamily::logistic, "logistic"},
                                                         {ReactionFamily::custom_table, "custom_table"}};
    return v;
}
inline const std::vector<EnumName<InitialKind>>& initial_names() {
    static const std::vector<EnumName<InitialKind>> v{{InitialKind::constant, "constant"}, {InitialKind::random, "random"},
                                                      {InitialKind::step, "step"},         {InitialKind::bump, "bump"},
                                                      {InitialKind::image, "image"},       {InitialKind::file, "file"}};
    return v;
}
inline const std::vector<EnumName<Scheme>>& scheme_names() {
    static const std::vector<EnumName<Scheme>> v{{Scheme::semi_implicit_w, "semi_implicit_w"},
                                                 {Scheme::explicit_euler, "explicit_euler"}};
    return v;
}
inline const std::vector<EnumName<MuMode>>& mu_names() {
    static const std::vector<EnumName<MuMode>> v{
        {MuMode::auto_growth, "auto_growth"}, {MuMode::auto_linf, "auto_linf"}, {MuMode::manual, "manual"}};
    return v;
}

template <typename E>
E parse_enum(const std::vector<EnumName<E>>& names, const std::string& key, const std::string& v, std::size_t line) {
    for (const auto& n : names)
        if (v == n.name) return n.value;
    std::string allowed;
    for (const auto& n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n.name);
    throw ConfigError("key '" + key + "': '" + v + "' is not one of " + allowed, line);
}

template <typename E>
std::string enum_name(const std::vector<EnumName<E>>& names, E e) {
    for (const auto& n : names)
        if (n.value == e) return n.name;
    return "?";
}

inline std::vector<std::string> split_words(const std::string& v) {
    std::istringstream ss(v);
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

inline double parse_real(const std::string& key, const std::string& v, std::size_t line) {
    if (v == "inf") return kInfinity;
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE || std::isnan(d))
        throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'", line);
    return d;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v, std::size_t line) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 19)
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'", line);
    return std::stoull(v);
}

inline bool parse_bool(const std::string& key, const std::string& v, std::size_t line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'", line);
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& v, std::size_t line) {
    std::vector<double> out;
    for (const auto& w : split_words(v)) out.push_back(parse_real(key, w, line));
    return out;
}

// "s0:v0 s1:v1 ..."
inline Knots parse_knots(const std::string& key, const std::string& v, std::size_t line) {
    Knots out;
    for (const auto& w : split_words(v)) {
        const auto colon = w.find(':');
        if (colon == std::string::npos)
            throw ConfigError("key '" + key + "': expected sigma:value pairs, got '" + w + "'", line);
        out.emplace_back(parse_real(key, w.substr(0, colon), line), parse_real(key, w.substr(colon + 1), line));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty table", line);
    return out;
}

inline std::string real_str(double v) { return std::isinf(v) && v > 0 ? "inf" : format_double(v); }

inline std::string knots_str(const Knots& k) {
    std::string s;
    for (const auto& [a, b] : k) s += (s.empty() ? "" : " ") + real_str(a) + ":" + real_str(b);
    return s;
}

struct KeyRule {
    std::string key;
    std::function<void(RunConfig&, const std::string&, std::size_t)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<KeyRule>& key_rules() {
    using C = RunConfig;
    using S = const std::string&;
    using L = std::size_t;
    static const std::vector<KeyRule> rules = [] {
        std::vector<KeyRule> r;
        auto add = [&r](std::string key, std::function<void(C&, S, L)> set, std::function<std::string(const C&)> get) {
            r.push_back({std::move(key), std::move(set), std::move(get)});
        };
        auto real_key = [&add](std::string key, std::function<double&(C&)> ref) {
            add(
                key, [key, ref](C& c, S v, L l) { ref(c) = parse_real(key, v, l); },
                [ref](const C& c) { return real_str(ref(const_cast<C&>(c))); });
        };

        add("seed", [](C& c, S v, L l) { c.seed = parse_unsigned("seed", v, l); },
            [](const C& c) { return std::to_string(c.seed); });

        add("grid.dim",
            [](C& c, S v, L l) {
                const auto d = parse_unsigned("grid.dim", v, l);
                if (d != 1 && d != 2) throw ConfigError("key 'grid.dim': must be 1 or 2", l);
                c.grid.dim = static_cast<int>(d);
            },
            [](const C& c) { return std::to_string(c.grid.dim); });
        add("grid.extents",
            [](C& c, S v, L l) {
                const auto xs = parse_reals("grid.extents", v, l);
                if (xs.empty() || xs.size() % 2 != 0)
                    throw ConfigError("key 'grid.extents': expected lo hi pairs", l);
                c.grid.extents.clear();
                for (std::size_t k = 0; k < xs.size(); k += 2) c.grid.extents.push_back({xs[k], xs[k + 1]});
            },
            [](const C& c) {
                std::string s;
                for (const auto& e : c.grid.extents) s += (s.empty() ? "" : " ") + real_str(e.lo) + " " + real_str(e.hi);
                return s;
            });
        add("grid.counts",
            [](C& c, S v, L l) {
                c.grid.counts.clear();
                for (const auto& w : split_words(v)) c.grid.counts.push_back(parse_unsigned("grid.counts", w, l));
            },
            [](const C& c) {
                std::string s;
                for (auto n : c.grid.counts) s += (s.empty() ? "" : " ") + std::to_string(n);
                return s;
            });

        add("kernel.family",
            [](C& c, S v, L l) { c.kernel.family = parse_enum(spatial_names(), "kernel.family", v, l); },
            [](const C& c) { return enum_name(spatial_names(), c.kernel.family); });
        real_key("kernel.radius", [](C& c) -> double& { return c.kernel.radius; });
        add("kernel.table", [](C& c, S v, L) { c.kernel.table = v; }, [](const C& c) { return c.kernel.table; });

        add("range.family", [](C& c, S v, L l) { c.range.family = parse_enum(range_names(), "range.family", v, l); },
            [](const C& c) { return enum_name(range_names(), c.range.family); });
        real_key("range.p", [](C& c) -> double& { return c.range.p; });
        real_key("range.h", [](C& c) -> double& { return c.range.h; });
        add("range.exponent", [](C& c, S v, L l) { c.range.exponent = parse_knots("range.exponent", v, l); },
            [](const C& c) { return knots_str(c.range.exponent); });
        add("range.base",
            [](C& c, S v, L l) {
                c.range.base = parse_enum(range_names(), "range.base", v, l);
                if (c.range.base == RangeFamily::mollified)
                    throw ConfigError("key 'range.base': a mollified kernel cannot be mollified again", l);
            },
            [](const C& c) { return enum_name(range_names(), c.range.base); });
        add("range.n",
            [](C& c, S v, L l) {
                const auto n = parse_unsigned("range.n", v, l);
                if (n < 1 || n > 1u << 30) throw ConfigError("key 'range.n': must be >= 1", l);
                c.range.n = static_cast<int>(n);
            },
            [](const C& c) { return std::to_string(c.range.n); });
        add("range.quad_count", [](C& c, S v, L l) { c.range.quad_count = parse_unsigned("range.quad_count", v, l); },
            [](const C& c) { return std::to_string(c.range.quad_count); });

        add("reaction.family",
            [](C& c, S v, L l) { c.reaction.family = parse_enum(reaction_names(), "reaction.family", v, l); },
            [](const C& c) { return enum_name(reaction_names(), c.reaction.family); });
        real_key("reaction.rate", [](C& c) -> double& { return c.reaction.rate; });
        real_key("reaction.a", [](C& c) -> double& { return c.reaction.a; });
        real_key("reaction.b", [](C& c) -> double& { return c.reaction.b; });
        real_key("reaction.capacity", [](C& c) -> double& { return c.reaction.capacity; });
        real_key("reaction.working_range", [](C& c) -> double& { return c.reaction.working_range; });
        add("reaction.table", [](C& c, S v, L l) { c.reaction.table = parse_knots("reaction.table", v, l); },
            [](const C& c) { return knots_str(c.reaction.table); });

        add("initial.kind",
            [](C& c, S v, L l) { c.initial.kind = parse_enum(initial_names(), "initial.kind", v, l); },
            [](const C& c) { return enum_name(initial_names(), c.initial.kind); });
        real_key("initial.value", [](C& c) -> double& { return c.initial.value; });
        real_key("initial.low", [](C& c) -> double& { return c.initial.low; });
        real_key("initial.high", [](C& c) -> double& { return c.initial.high; });
        real_key("initial.position", [](C& c) -> double& { return c.initial.position; });
        real_key("initial.width", [](C& c) -> double& { return c.initial.width; });
        add("initial.path", [](C& c, S v, L) { c.initial.path = v; }, [](const C& c) { return c.initial.path; });

        real_key("solver.T", [](C& c) -> double& { return c.solver.T; });
        add("solver.steps",
            [](C& c, S v, L l) {
                c.solver.steps = parse_unsigned("solver.steps", v, l);
                if (c.solver.steps < 1) throw ConfigError("key 'solver.steps': must be >= 1", l);
            },
            [](const C& c) { return std::to_string(c.solver.steps); });
        add("solver.scheme", [](C& c, S v, L l) { c.solver.scheme = parse_enum(scheme_names(), "solver.scheme", v, l); },
            [](const C& c) { return enum_name(scheme_names(), c.solver.scheme); });
        add("solver.mu_mode", [](C& c, S v, L l) { c.solver.mu_mode = parse_enum(mu_names(), "solver.mu_mode", v, l); },
            [](const C& c) { return enum_name(mu_names(), c.solver.mu_mode); });
        real_key("solver.mu", [](C& c) -> double& { return c.solver.mu; });
        real_key("solver.mu_margin", [](C& c) -> double& { return c.solver.mu_margin; });
        add("solver.record_every",
            [](C& c, S v, L l) {
                c.solver.record_every = parse_unsigned("solver.record_every", v, l);
                if (c.solver.record_every < 1) throw ConfigError("key 'solver.record_every': must be >= 1", l);
            },
            [](const C& c) { return std::to_string(c.solver.record_every); });
        real_key("solver.linf_k_factor", [](C& c) -> double& { return c.solver.linf_k_factor; });
        add("solver.allow_invalid_assumptions",
            [](C& c, S v, L l) { c.solver.allow_invalid_assumptions = parse_bool("solver.allow_invalid_assumptions", v, l); },
            [](const C& c) { return std::string(c.solver.allow_invalid_assumptions ? "true" : "false"); });

        add("study.levels",
            [](C& c, S v, L l) {
                c.study.levels.clear();
                for (const auto& w : split_words(v))
                    c.study.levels.push_back(static_cast<int>(parse_unsigned("study.levels", w, l)));
            },
            [](const C& c) {
                std::string s;
                for (int n : c.study.levels) s += (s.empty() ? "" : " ") + std::to_string(n);
                return s;
            });
        add("study.steps_list",
            [](C& c, S v, L l) {
                c.study.steps_list.clear();
                for (const auto& w : split_words(v)) c.study.steps_list.push_back(parse_unsigned("study.steps_list", w, l));
            },
            [](const C& c) {
                std::string s;
                for (auto n : c.study.steps_list) s += (s.empty() ? "" : " ") + std::to_string(n);
                return s;
            });
        real_key("study.norm", [](C& c) -> double& { return c.study.norm; });
        real_key("study.offset", [](C& c) -> double& { return c.study.offset; });
        real_key("study.noise", [](C& c) -> double& { return c.study.noise; });

        add("output.dir", [](C& c, S v, L) { c.output.dir = v; }, [](const C& c) { return c.output.dir; });
        add("output.write_fields", [](C& c, S v, L l) { c.output.write_fields = parse_bool("output.write_fields", v, l); },
            [](const C& c) { return std::string(c.output.write_fields ? "true" : "false"); });
        return r;
    }();
    return rules;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Flat "key = value" text, '#' to end of line is a comment. Unknown or
/// repeated keys, malformed values and missing required keys are errors.
inline RunConfig parse_config(std::istream& is, const std::string& base_dir = ".") {
    RunConfig cfg;
    cfg.base_dir = base_dir;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const detail::KeyRule* rule = nullptr;
        for (const auto& r : detail::key_rules())
            if (r.key == key) rule = &r;
        if (!rule) throw ConfigError("unknown key '" + key + "'", lineno);
        if (!seen.insert(key).second) throw ConfigError("key '" + key + "' given twice", lineno);
        rule->set(cfg, value, lineno);
    }
    const bool image = seen.count("initial.kind") && cfg.initial.kind == InitialKind::image;
    std::vector<std::string> required{"range.family", "reaction.family", "initial.kind"};
    if (!image) required.insert(required.begin(), {"grid.dim", "grid.extents", "grid.counts"});
    for (const auto& k : required)
        if (!seen.count(k)) throw ConfigError("missing required key '" + k + "'");
    const int grid_keys = static_cast<int>(seen.count("grid.dim") + seen.count("grid.extents") + seen.count("grid.counts"));
    if (grid_keys != 0 && grid_keys != 3) throw ConfigError("grid.dim, grid.extents and grid.counts go together");
    cfg.grid.given = grid_keys == 3;
    if (cfg.grid.given) {
        if (cfg.grid.extents.size() != static_cast<std::size_t>(cfg.grid.dim) ||
            cfg.grid.counts.size() != static_cast<std::size_t>(cfg.grid.dim))
            throw ConfigError("grid.extents and grid.counts must match grid.dim");
    }
    if ((cfg.initial.kind == InitialKind::image || cfg.initial.kind == InitialKind::file) && cfg.initial.path.empty())
        throw ConfigError("initial.path is required for initial.kind = " +
                          detail::enum_name(detail::initial_names(), cfg.initial.kind));
    if (cfg.kernel.family == SpatialFamily::custom_table && cfg.kernel.table.empty())
        throw ConfigError("kernel.table is required for kernel.family = custom_table");
    cfg.solver.seed = cfg.seed;
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(in, dir.empty() ? "." : dir.string());
}

/// Every key with its value, defaults included, in a fixed order. Grid keys
/// are left out when the grid comes from an image.
inline void serialize_config(std::ostream& os, const RunConfig& cfg) {
    for (const auto& r : detail::key_rules()) {
        if (!cfg.grid.given && r.key.rfind("grid.", 0) == 0) continue;
        os << r.key << " = " << r.get(cfg) << "\n";
    }
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    serialize_config(os, cfg);
    return os.str();
}

// ---------------------------------------------------------------------------
// Building a problem from a config
// ---------------------------------------------------------------------------

struct Scenario {
    Problem problem;
    Field u0;
};

inline std::string resolve_path(const RunConfig& cfg, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (std::filesystem::path(cfg.base_dir) / path).string();
}

inline Field build_initial(const RunConfig& cfg, const Grid& g) {
    const InitialSpec& s = cfg.initial;
    switch (s.kind) {
        case InitialKind::constant: return Field(g, s.value);
        case InitialKind::random: {
            Rng rng(cfg.seed);
            return Field::from_function(g, [&](std::size_t) { return rng.uniform(s.low, s.high); });
        }
        case InitialKind::step:
            return Field::from_function(g, [&](std::size_t i) { return g.coordinate(i, 0) < s.position ? s.low : s.high; });
        case InitialKind::bump:
            return Field::from_function(g, [&](std::size_t i) {
                double r2 = 0.0;
                for (int a = 0; a < g.dim(); ++a) {
                    const Interval& e = g.extents()[a];
                    const double centre = a == 0 ? s.position : 0.5 * (e.lo + e.hi);
                    const double d = g.coordinate(i, a) - centre;
                    r2 += d * d;
                }
                return s.low + (s.high - s.low) * std::exp(-r2 / (s.width * s.width));
            });
        case InitialKind::image: return image_to_field(load_pgm(resolve_path(cfg, s.path)));
        case InitialKind::file: {
            std::ifstream in(resolve_path(cfg, s.path));
            if (!in) throw ConfigError("cannot open initial field '" + s.path + "'");
            Field f = read_field_csv(in);
            if (!(f.grid() == g)) throw ConfigError("initial field file does not match the configured grid");
            return f;
        }
    }
    return Field(g, 0.0);
}

inline RangeKernel build_range(const RangeSpec& s, RangeFamily family, const Field& u0) {
    switch (family) {
        case RangeFamily::linear: return RangeKernel::linear();
        case RangeFamily::p_laplacian: return RangeKernel::p_laplacian(s.p);
        case RangeFamily::variable_exponent: return RangeKernel::variable_exponent(ExponentTable(s.exponent));
        case RangeFamily::spatial_exponent: return RangeKernel::spatial_exponent(ExponentTable(s.exponent), u0);
        case RangeFamily::bilateral_gaussian: return RangeKernel::bilateral_gaussian(s.h);
        case RangeFamily::mollified: return mollify_range_kernel(build_range(s, s.base, u0), s.n, s.quad_count);
        case RangeFamily::custom: break;
    }
    throw ConfigError("range family cannot be built from a config");
}

inline Reaction build_reaction(const ReactionSpec& s) {
    switch (s.family) {
        case ReactionFamily::zero: return Reaction::zero();
        case ReactionFamily::linear_decay: return Reaction::linear_decay(s.rate);
        case ReactionFamily::affine: return Reaction::affine(s.a, s.b);
        case ReactionFamily::logistic: return Reaction::logistic(s.rate, s.capacity, s.working_range);
        case ReactionFamily::custom_table: return Reaction::custom_table(s.table, s.working_range);
    }
    return Reaction::zero();
}

inline Scenario build_scenario(const RunConfig& cfg) {
    Grid g;
    Field u0;
    if (cfg.initial.kind == InitialKind::image) {
        u0 = build_initial(cfg, Grid{});
        g = u0.grid();
        if (cfg.grid.given && !(build_grid(cfg.grid.dim, cfg.grid.extents, cfg.grid.counts) == g))
            throw ConfigError("configured grid does not match the image size");
    } else {
        g = build_grid(cfg.grid.dim, cfg.grid.extents, cfg.grid.counts);
        u0 = build_initial(cfg, g);
    }
    std::vector<KernelSample> table;
    if (cfg.kernel.family == SpatialFamily::custom_table) {
        std::ifstream in(resolve_path(cfg, cfg.kernel.table));
        if (!in) throw ConfigError("cannot open kernel table '" + cfg.kernel.table + "'");
        table = read_kernel_table_csv(in, g.dim());
    }
    SpatialKernelTable J = make_spatial_kernel(g, cfg.kernel.family, cfg.kernel.radius, table.empty() ? nullptr : &table);
    RangeKernel A = build_range(cfg.range, cfg.range.family, u0);
    Reaction f = build_reaction(cfg.reaction);
    return Scenario{Problem{g, std::move(J), std::move(A), std::move(f)}, std::move(u0)};
}

}  // namespace nldiff
