#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hmfrac/assembly/parameters.hpp"
#include "hmfrac/coupling/settings.hpp"
#include "hmfrac/mesh/boundary.hpp"
#include "hmfrac/mesh/generator.hpp"

namespace hmfrac::cli {

using mesh::Point;

/// Excavated zone along a horizontal borehole: x in (origin, origin + length),
/// axis at y = axis_y. The front sits at origin + speed·t.
struct ExcavationConfig {
    bool enabled = false;
    double speed = 1.0;
    double origin = 0.0;
    double length = 40.0;
    double axis_y = 0.0;
    double radius = 1.1;  // R
    double l_in = 1.0;
    double l_out = 4.0;
    double k0 = 3e-13;
    double k1 = 1e-8;
};

struct ObservationPoint {
    std::string name;
    Point where;
};

struct OutputConfig {
    std::string directory = "output";  // relative to the working directory
    std::vector<double> snapshot_times;
    std::string observations = "observations.csv";
    std::string steps = "steps.csv";
    std::string fields_prefix = "fields";
    std::string config_echo = "resolved_config.ini";
    bool qp_trace = false;
    std::string qp_trace_file = "qp_trace.csv";
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::filesystem::path base_dir;  // a relative mesh file resolves against it
    std::optional<std::string> mesh_file;
    mesh::GridSpec grid;
    assembly::HmParameters params;
    mesh::BoundaryTags tags;
    ExcavationConfig excavation;
    coupling::TimeScheme time{{{1.0, 1.0}}};
    coupling::SplittingSettings splitting;
    std::vector<ObservationPoint> observations;
    OutputConfig output;
    std::uint64_t seed = 0;
};

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline std::optional<double> to_double(const std::string& s) {
    const auto t = trim(s);
    if (t.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
        const double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

/// Reads keys of one INI section, remembering which ones were consumed and
/// collecting errors as "section.key: message".
class Section {
public:
    Section(std::string name, const ptree* node, std::vector<std::string>& errors)
        : name_(std::move(name)), node_(node), errors_(&errors) {}

    const std::string& name() const { return name_; }
    bool present() const { return node_ != nullptr; }

    std::optional<std::string> raw(const std::string& key) {
        used_.insert(key);
        if (!node_) return std::nullopt;
        const auto it = node_->find(key);
        if (it == node_->not_found()) return std::nullopt;
        return trim(it->second.data());
    }

    bool has(const std::string& key) const { return node_ && node_->find(key) != node_->not_found(); }

    void error(const std::string& key, const std::string& what) { errors_->push_back(name_ + "." + key + ": " + what); }

    double number(const std::string& key, double fallback) {
        const auto r = raw(key);
        if (!r) return fallback;
        const auto v = to_double(*r);
        if (!v) {
            error(key, "expected a number, got '" + *r + "'");
            return fallback;
        }
        return *v;
    }

    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) {
            used_.insert(key);
            return std::nullopt;
        }
        return number(key, 0.0);
    }

    long integer(const std::string& key, long fallback) {
        const double v = number(key, static_cast<double>(fallback));
        if (v != std::floor(v)) {
            error(key, "expected an integer");
            return fallback;
        }
        return static_cast<long>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto r = raw(key);
        if (!r) return fallback;
        if (*r == "true" || *r == "1" || *r == "yes") return true;
        if (*r == "false" || *r == "0" || *r == "no") return false;
        error(key, "expected true or false, got '" + *r + "'");
        return fallback;
    }

    std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }

    std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
        const auto v = text(key, fallback);
        for (const auto& a : allowed)
            if (v == a) return v;
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        error(key, "'" + v + "' is not one of " + list);
        return fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback, std::size_t count = 0) {
        const auto r = raw(key);
        if (!r) return fallback;
        std::vector<double> out;
        if (!r->empty()) {
            for (const auto& item : split(*r, ',')) {
                const auto v = to_double(item);
                if (!v) {
                    error(key, "expected comma-separated numbers, got '" + *r + "'");
                    return fallback;
                }
                out.push_back(*v);
            }
        }
        if (count && out.size() != count) {
            error(key, "expected " + std::to_string(count) + " comma-separated numbers");
            return fallback;
        }
        return out;
    }

    Point point(const std::string& key, Point fallback) {
        const auto v = numbers(key, {fallback.x, fallback.y}, 2);
        return {v[0], v[1]};
    }

    assembly::Stress stress(const std::string& key, assembly::Stress fallback) {
        const auto v = numbers(key, {fallback.xx, fallback.yy, fallback.xy}, 3);
        return {v[0], v[1], v[2]};
    }

    mesh::Rect rect() {
        const double x0 = number("x0", 0.0), y0 = number("y0", 0.0), x1 = number("x1", 0.0), y1 = number("y1", 0.0);
        for (const char* k : {"x0", "y0", "x1", "y1"})
            if (!has(k)) error(k, "required");
        if (!(x1 > x0) || !(y1 > y0)) error("x1", "rectangle needs x0 < x1 and y0 < y1");
        return {x0, y0, x1, y1};
    }

    void report_unknown() {
        if (!node_) return;
        for (const auto& [key, child] : *node_)
            if (!used_.count(key)) errors_->push_back(name_ + "." + key + ": unknown key");
    }

private:
    std::string name_;
    const ptree* node_;
    std::vector<std::string>* errors_;
    std::set<std::string> used_;
};

inline mesh::MechValue mech_value(Section& s, const std::string& key) {
    mesh::MechValue v;
    const auto r = s.raw(key);
    if (!r) return v;
    if (*r == "initial_stress") {
        v.initial_stress = true;
        return v;
    }
    const auto parts = split(*r, ',');
    const auto x = parts.size() == 2 ? to_double(parts[0]) : std::nullopt;
    const auto y = parts.size() == 2 ? to_double(parts[1]) : std::nullopt;
    if (!x || !y) {
        s.error(key, "expected 'x, y' or 'initial_stress', got '" + *r + "'");
        return v;
    }
    v.vector = {*x, *y};
    return v;
}

inline std::string mech_value_text(const mesh::MechValue& v) {
    return v.initial_stress ? "initial_stress" : fmt(v.vector.x) + ", " + fmt(v.vector.y);
}

inline const char* flow_kind_name(mesh::FlowBcKind k) { return k == mesh::FlowBcKind::dirichlet ? "dirichlet" : "neumann"; }

inline const char* mech_kind_name(mesh::MechBcKind k) {
    switch (k) {
        case mesh::MechBcKind::dirichlet: return "dirichlet";
        case mesh::MechBcKind::roller: return "roller";
        default: return "neumann";
    }
}

inline const char* schedule_name(mesh::Schedule::Kind k) {
    switch (k) {
        case mesh::Schedule::Kind::ramp: return "ramp";
        case mesh::Schedule::Kind::staged: return "staged";
        default: return "constant";
    }
}

inline const char* direction_name(mesh::FractureDirection d) {
    switch (d) {
        case mesh::FractureDirection::horizontal: return "horizontal";
        case mesh::FractureDirection::vertical: return "vertical";
        default: return "diagonal";
    }
}

/// "prefix:label" → label, or nullopt.
inline std::optional<std::string> labelled(const std::string& section, const std::string& prefix) {
    if (section.rfind(prefix + ":", 0) != 0) return std::nullopt;
    return section.substr(prefix.size() + 1);
}

}  // namespace detail

/// Parses an INI scenario description (see README for the schema). Every
/// problem is collected; a ConfigError lists them all, one per line.
inline ScenarioConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {}) {
    using detail::Section;
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    detail::ptree root;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }
    // The INI reader drops sections without keys; "[boundary:left]" alone is
    // meaningful (all defaults), so put them back.
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto t = detail::trim(line);
            if (t.size() < 2 || t.front() != '[' || t.back() != ']') continue;
            const auto name = t.substr(1, t.size() - 2);
            if (root.find(name) == root.not_found()) root.push_back({name, detail::ptree()});
        }
    }
    std::vector<std::string> errors;
    ScenarioConfig cfg;
    cfg.base_dir = base_dir;

    auto section = [&](const std::string& name) {
        const auto it = root.find(name);
        return Section(name, it == root.not_found() ? nullptr : &it->second, errors);
    };
    std::set<std::string> known_sections;
    auto take = [&](Section& s) {
        known_sections.insert(s.name());
        s.report_unknown();
    };

    {
        auto s = section("run");
        cfg.name = s.text("name", cfg.name);
        const long seed = s.integer("seed", 0);
        if (seed < 0) s.error("seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(std::max(seed, 0L));
        take(s);
    }
    {
        auto s = section("mesh");
        if (s.has("file")) {
            cfg.mesh_file = s.text("file", "");
            for (const char* k : {"x0", "y0", "x1", "y1", "nx", "ny"})
                if (s.has(k)) s.error(k, "not allowed together with mesh.file");
        } else {
            cfg.grid.extent = {s.number("x0", 0.0), s.number("y0", 0.0), s.number("x1", 1.0), s.number("y1", 1.0)};
            cfg.grid.nx = static_cast<int>(s.integer("nx", 1));
            cfg.grid.ny = static_cast<int>(s.integer("ny", 1));
            if (cfg.grid.nx < 1 || cfg.grid.ny < 1) s.error("nx", "grid needs nx, ny >= 1");
            if (!(cfg.grid.extent.x1 > cfg.grid.extent.x0) || !(cfg.grid.extent.y1 > cfg.grid.extent.y0))
                s.error("x1", "domain needs x0 < x1 and y0 < y1");
        }
        take(s);
    }
    for (const auto& [name, node] : root) {
        if (const auto label = detail::labelled(name, "hole")) {
            Section s(name, &node, errors);
            if (label->empty() || label->find('.') != std::string::npos) s.error("", "hole name must be non-empty without dots");
            cfg.grid.holes.push_back({*label, s.rect()});
            take(s);
        } else if (const auto id = detail::labelled(name, "region")) {
            Section s(name, &node, errors);
            const auto v = detail::to_double(*id);
            if (!v || *v != std::floor(*v)) s.error("", "region id must be an integer");
            cfg.grid.regions.push_back({v ? static_cast<int>(*v) : 0, s.rect()});
            take(s);
        } else if (detail::labelled(name, "fracture")) {
            Section s(name, &node, errors);
            mesh::FractureSegment f;
            for (const char* k : {"from", "to", "delta"})
                if (!s.has(k)) s.error(k, "required");
            f.a = s.point("from", {});
            f.b = s.point("to", {});
            f.delta = s.number("delta", 0.0);
            if (!(f.delta > 0.0)) s.error("delta", "must be positive");
            cfg.grid.fractures.push_back(f);
            take(s);
        }
    }
    if (cfg.mesh_file && (!cfg.grid.holes.empty() || !cfg.grid.regions.empty() || !cfg.grid.fractures.empty()))
        errors.push_back("mesh.file: hole, region and fracture sections need the generated mesh");
    {
        auto s = section("random_fractures");
        auto& r = cfg.grid.random;
        r.count = static_cast<int>(s.integer("count", 0));
        r.min_cells = static_cast<int>(s.integer("min_cells", r.min_cells));
        r.max_cells = static_cast<int>(s.integer("max_cells", r.max_cells));
        r.delta = s.number("delta", r.delta);
        r.max_attempts = static_cast<int>(s.integer("max_attempts", r.max_attempts));
        if (const auto d = s.raw("directions")) {
            r.directions.clear();
            for (const auto& item : detail::split(*d, ',')) {
                if (item == "horizontal") r.directions.push_back(mesh::FractureDirection::horizontal);
                else if (item == "vertical") r.directions.push_back(mesh::FractureDirection::vertical);
                else if (item == "diagonal") r.directions.push_back(mesh::FractureDirection::diagonal);
                else s.error("directions", "unknown direction '" + item + "'");
            }
        }
        if (s.has("window")) {
            const auto w = s.numbers("window", {}, 4);
            if (w.size() == 4) r.window = mesh::Rect{w[0], w[1], w[2], w[3]};
        }
        if (r.count < 0) s.error("count", "must be non-negative");
        if (r.count > 0 && cfg.mesh_file) s.error("count", "random fractures need the generated mesh");
        take(s);
    }
    for (const auto& [name, node] : root) {
        const auto id = detail::labelled(name, "material");
        if (!id) continue;
        Section s(name, &node, errors);
        const auto v = detail::to_double(*id);
        if (!v || *v != std::floor(*v)) s.error("", "material id must be an integer");
        assembly::Material m;
        m.young = s.number("young", m.young);
        m.poisson = s.number("poisson", m.poisson);
        m.biot = s.number("biot", m.biot);
        m.storativity = s.number("storativity", m.storativity);
        m.conductivity = s.number("conductivity", m.conductivity);
        m.beta = s.optional_number("beta");
        cfg.params.materials[v ? static_cast<int>(*v) : 0] = m;
        take(s);
    }
    {
        auto s = section("fracture_material");
        auto& f = cfg.params.fracture;
        f.young = s.number("young", f.young);
        f.poisson = s.number("poisson", f.poisson);
        f.biot = s.number("biot", f.biot);
        f.storativity = s.number("storativity", f.storativity);
        f.roughness = s.number("roughness", f.roughness);
        f.delta_min = s.number("delta_min", f.delta_min);
        f.initial_stress = s.stress("initial_stress", f.initial_stress);
        f.beta = s.optional_number("beta");
        take(s);
    }
    {
        auto s = section("fluid");
        auto& f = cfg.params.fluid;
        f.density = s.number("density", f.density);
        f.gravity = s.number("gravity", f.gravity);
        f.viscosity = s.number("viscosity", f.viscosity);
        take(s);
    }
    {
        auto s = section("physics");
        auto& p = cfg.params;
        p.head_scale = s.number("head_scale", p.head_scale);
        p.time_scale = s.number("time_scale", p.time_scale);
        p.initial_stress = s.stress("initial_stress", p.initial_stress);
        p.body_force = s.point("body_force", p.body_force);
        p.fracture_force = s.point("fracture_force", p.fracture_force);
        p.matrix_source = s.number("matrix_source", p.matrix_source);
        p.fracture_source = s.number("fracture_source", p.fracture_source);
        take(s);
    }
    {
        auto s = section("excavation");
        auto& e = cfg.excavation;
        e.enabled = s.present();
        e.speed = s.number("speed", e.speed);
        e.origin = s.number("origin", e.origin);
        e.length = s.number("length", e.length);
        e.axis_y = s.number("axis_y", e.axis_y);
        e.radius = s.number("radius", e.radius);
        e.l_in = s.number("l_in", e.l_in);
        e.l_out = s.number("l_out", e.l_out);
        e.k0 = s.number("k0", e.k0);
        e.k1 = s.number("k1", e.k1);
        if (e.enabled) {
            if (!(e.speed > 0.0)) s.error("speed", "must be positive");
            if (!(e.length > 0.0)) s.error("length", "must be positive");
            if (!(e.radius >= 0.0)) s.error("radius", "must be non-negative");
            if (!(e.l_in >= 0.0)) s.error("l_in", "must be non-negative");
            if (!(e.l_in < e.l_out)) s.error("l_in", "must be smaller than l_out");
            if (!(e.k0 > 0.0)) s.error("k0", "must be positive");
            if (!(e.k1 > 0.0)) s.error("k1", "must be positive");
        }
        take(s);
    }
    for (const auto& [name, node] : root) {
        const auto tag_name = detail::labelled(name, "boundary");
        if (!tag_name) continue;
        Section s(name, &node, errors);
        mesh::BoundaryTag t;
        t.name = *tag_name;
        t.flow.kind = s.choice("flow", "neumann", {"dirichlet", "neumann"}) == "dirichlet" ? mesh::FlowBcKind::dirichlet
                                                                                           : mesh::FlowBcKind::neumann;
        t.flow.value = s.number("flow_value", 0.0);
        t.flow.excavated_value = s.number("flow_excavated_value", 0.0);
        const auto mech = s.choice("mech", "neumann", {"dirichlet", "roller", "neumann"});
        t.mech.kind = mech == "dirichlet" ? mesh::MechBcKind::dirichlet
                      : mech == "roller"  ? mesh::MechBcKind::roller
                                          : mesh::MechBcKind::neumann;
        t.mech.value = detail::mech_value(s, "mech_value");
        t.mech.excavated_value = detail::mech_value(s, "mech_excavated_value");
        if (t.mech.kind != mesh::MechBcKind::neumann &&
            (t.mech.value.initial_stress || t.mech.excavated_value.initial_stress))
            s.error("mech_value", "initial_stress is a traction; it needs mech = neumann");
        const auto sched = s.choice("schedule", "constant", {"constant", "ramp", "staged"});
        mesh::Schedule schedule;
        schedule.kind = sched == "ramp" ? mesh::Schedule::Kind::ramp
                        : sched == "staged" ? mesh::Schedule::Kind::staged
                                            : mesh::Schedule::Kind::constant;
        schedule.t0 = s.number("t0", 0.0);
        schedule.t1 = s.number("t1", 0.0);
        if (schedule.kind != mesh::Schedule::Kind::ramp && (s.has("t0") || s.has("t1")))
            s.error("t0", "t0 and t1 belong to schedule = ramp");
        if (schedule.kind == mesh::Schedule::Kind::staged) {
            if (!cfg.excavation.enabled) s.error("schedule", "staged needs an [excavation] section");
            schedule.origin = cfg.excavation.origin;
            schedule.speed = cfg.excavation.speed;
        }
        t.flow.schedule = t.mech.schedule = schedule;
        cfg.tags[t.name] = t;
        take(s);
    }
    {
        auto s = section("time");
        if (!s.has("intervals")) s.error("intervals", "required");
        const auto r = s.raw("intervals");
        if (r) {
            cfg.time.intervals.clear();
            for (const auto& item : detail::split(*r, ',')) {
                const auto pair = detail::split(item, ':');
                const auto end = pair.size() == 2 ? detail::to_double(pair[0]) : std::nullopt;
                const auto dt = pair.size() == 2 ? detail::to_double(pair[1]) : std::nullopt;
                if (!end || !dt) {
                    s.error("intervals", "expected 'end:dt, end:dt, ...', got '" + *r + "'");
                    cfg.time.intervals.clear();
                    break;
                }
                cfg.time.intervals.emplace_back(*end, *dt);
            }
            try {
                if (!cfg.time.intervals.empty()) cfg.time.check();
            } catch (const Error& e) {
                s.error("intervals", e.what());
            }
        }
        take(s);
    }
    {
        auto s = section("splitting");
        auto& sp = cfg.splitting;
        sp.max_outer = static_cast<int>(s.integer("max_outer", sp.max_outer));
        sp.tolerance = s.number("tolerance", sp.tolerance);
        sp.flow_solver = s.choice("flow_solver", "direct", {"direct", "schur_cg"}) == "schur_cg"
                             ? coupling::FlowSolver::schur_cg
                             : coupling::FlowSolver::direct;
        sp.flow_cg_tolerance = s.number("flow_cg_tolerance", sp.flow_cg_tolerance);
        sp.flow_cg_max_iter = static_cast<int>(s.integer("flow_cg_max_iter", sp.flow_cg_max_iter));
        sp.warm_start = s.boolean("warm_start", sp.warm_start);
        sp.mpgp.tolerance = s.number("mpgp_tolerance", sp.mpgp.tolerance);
        sp.mpgp.gamma = s.number("mpgp_gamma", sp.mpgp.gamma);
        if (const auto cap = s.optional_number("mpgp_max_hessian_mults")) sp.mpgp.max_hessian_mults = static_cast<long>(*cap);
        sp.mpgp.step_length = s.optional_number("mpgp_step_length");
        try {
            sp.check();
        } catch (const Error& e) {
            s.error("max_outer", e.what());
        }
        if (!(sp.mpgp.tolerance > 0.0)) s.error("mpgp_tolerance", "must be positive");
        if (!(sp.mpgp.gamma > 0.0)) s.error("mpgp_gamma", "must be positive");
        take(s);
    }
    for (const auto& [name, node] : root) {
        const auto label = detail::labelled(name, "observation");
        if (!label) continue;
        Section s(name, &node, errors);
        if (!s.has("point")) s.error("point", "required");
        cfg.observations.push_back({*label, s.point("point", {})});
        take(s);
    }
    {
        auto s = section("output");
        auto& o = cfg.output;
        o.directory = s.text("directory", o.directory);
        o.snapshot_times = s.numbers("snapshot_times", o.snapshot_times);
        o.observations = s.text("observations", o.observations);
        o.steps = s.text("steps", o.steps);
        o.fields_prefix = s.text("fields_prefix", o.fields_prefix);
        o.config_echo = s.text("config_echo", o.config_echo);
        o.qp_trace = s.boolean("qp_trace", o.qp_trace);
        o.qp_trace_file = s.text("qp_trace_file", o.qp_trace_file);
        const double end = cfg.time.final_time();
        for (double t : o.snapshot_times)
            if (t < 0.0 || t > end) s.error("snapshot_times", "time " + detail::fmt(t) + " outside [0, T]");
        take(s);
    }

    for (const auto& [name, node] : root) {
        if (!node.data().empty() || node.empty()) {
            if (!known_sections.count(name)) errors.push_back(name + ": unknown key or section");
            continue;
        }
        if (!known_sections.count(name)) errors.push_back(name + ": unknown section");
    }
    if (cfg.excavation.enabled) {
        const auto& e = cfg.excavation;
        const double done = e.length / e.speed;
        if (!(done > 0.0 && done < cfg.time.final_time()))
            errors.push_back("excavation.length: excavation must finish inside (0, T)");
    }
    try {
        cfg.params.check();
    } catch (const Error& e) {
        errors.push_back(std::string("material, fracture_material, fluid or physics: ") + e.what());
    }

    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
        throw ConfigError(msg);
    }
    return cfg;
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_config(is, path.parent_path());
}

inline ScenarioConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = {}) {
    std::istringstream is(text);
    return parse_config(is, base_dir);
}

/// The configuration with every default filled in, in the input format.
/// Parsing the echo gives back the same configuration.
inline std::string resolved_config(const ScenarioConfig& c) {
    using detail::fmt;
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
    os << "[run]\n";
    kv("name", c.name);
    kv("seed", std::to_string(c.seed));
    os << "\n[mesh]\n";
    if (c.mesh_file) {
        kv("file", *c.mesh_file);
    } else {
        kv("x0", fmt(c.grid.extent.x0));
        kv("y0", fmt(c.grid.extent.y0));
        kv("x1", fmt(c.grid.extent.x1));
        kv("y1", fmt(c.grid.extent.y1));
        kv("nx", std::to_string(c.grid.nx));
        kv("ny", std::to_string(c.grid.ny));
    }
    auto rect = [&](const mesh::Rect& r) {
        kv("x0", fmt(r.x0));
        kv("y0", fmt(r.y0));
        kv("x1", fmt(r.x1));
        kv("y1", fmt(r.y1));
    };
    for (const auto& h : c.grid.holes) {
        os << "\n[hole:" << h.name << "]\n";
        rect(h.rect);
    }
    for (const auto& r : c.grid.regions) {
        os << "\n[region:" << r.region << "]\n";
        rect(r.rect);
    }
    for (std::size_t i = 0; i < c.grid.fractures.size(); ++i) {
        const auto& f = c.grid.fractures[i];
        os << "\n[fracture:" << i << "]\n";
        kv("from", fmt(f.a.x) + ", " + fmt(f.a.y));
        kv("to", fmt(f.b.x) + ", " + fmt(f.b.y));
        kv("delta", fmt(f.delta));
    }
    if (!c.mesh_file) {
        const auto& r = c.grid.random;
        os << "\n[random_fractures]\n";
        kv("count", std::to_string(r.count));
        kv("min_cells", std::to_string(r.min_cells));
        kv("max_cells", std::to_string(r.max_cells));
        kv("delta", fmt(r.delta));
        kv("max_attempts", std::to_string(r.max_attempts));
        std::string dirs;
        for (auto d : r.directions) dirs += (dirs.empty() ? "" : ", ") + std::string(detail::direction_name(d));
        kv("directions", dirs);
        if (r.window) kv("window", detail::fmt_list({r.window->x0, r.window->y0, r.window->x1, r.window->y1}));
    }
    for (const auto& [id, m] : c.params.materials) {
        os << "\n[material:" << id << "]\n";
        kv("young", fmt(m.young));
        kv("poisson", fmt(m.poisson));
        kv("biot", fmt(m.biot));
        kv("storativity", fmt(m.storativity));
        kv("conductivity", fmt(m.conductivity));
        if (m.beta) kv("beta", fmt(*m.beta));
    }
    const auto& f = c.params.fracture;
    os << "\n[fracture_material]\n";
    kv("young", fmt(f.young));
    kv("poisson", fmt(f.poisson));
    kv("biot", fmt(f.biot));
    kv("storativity", fmt(f.storativity));
    kv("roughness", fmt(f.roughness));
    kv("delta_min", fmt(f.delta_min));
    kv("initial_stress", detail::fmt_list({f.initial_stress.xx, f.initial_stress.yy, f.initial_stress.xy}));
    if (f.beta) kv("beta", fmt(*f.beta));
    os << "\n[fluid]\n";
    kv("density", fmt(c.params.fluid.density));
    kv("gravity", fmt(c.params.fluid.gravity));
    kv("viscosity", fmt(c.params.fluid.viscosity));
    const auto& p = c.params;
    os << "\n[physics]\n";
    kv("head_scale", fmt(p.head_scale));
    kv("time_scale", fmt(p.time_scale));
    kv("initial_stress", detail::fmt_list({p.initial_stress.xx, p.initial_stress.yy, p.initial_stress.xy}));
    kv("body_force", fmt(p.body_force.x) + ", " + fmt(p.body_force.y));
    kv("fracture_force", fmt(p.fracture_force.x) + ", " + fmt(p.fracture_force.y));
    kv("matrix_source", fmt(p.matrix_source));
    kv("fracture_source", fmt(p.fracture_source));
    if (c.excavation.enabled) {
        const auto& e = c.excavation;
        os << "\n[excavation]\n";
        kv("speed", fmt(e.speed));
        kv("origin", fmt(e.origin));
        kv("length", fmt(e.length));
        kv("axis_y", fmt(e.axis_y));
        kv("radius", fmt(e.radius));
        kv("l_in", fmt(e.l_in));
        kv("l_out", fmt(e.l_out));
        kv("k0", fmt(e.k0));
        kv("k1", fmt(e.k1));
    }
    for (const auto& [name, t] : c.tags) {
        os << "\n[boundary:" << name << "]\n";
        kv("flow", detail::flow_kind_name(t.flow.kind));
        kv("flow_value", fmt(t.flow.value));
        kv("flow_excavated_value", fmt(t.flow.excavated_value));
        kv("mech", detail::mech_kind_name(t.mech.kind));
        kv("mech_value", detail::mech_value_text(t.mech.value));
        kv("mech_excavated_value", detail::mech_value_text(t.mech.excavated_value));
        kv("schedule", detail::schedule_name(t.flow.schedule.kind));
        if (t.flow.schedule.kind == mesh::Schedule::Kind::ramp) {
            kv("t0", fmt(t.flow.schedule.t0));
            kv("t1", fmt(t.flow.schedule.t1));
        }
    }
    os << "\n[time]\n";
    std::string iv;
    for (const auto& [end, dt] : c.time.intervals) iv += (iv.empty() ? "" : ", ") + fmt(end) + ":" + fmt(dt);
    kv("intervals", iv);
    const auto& s = c.splitting;
    os << "\n[splitting]\n";
    kv("max_outer", std::to_string(s.max_outer));
    kv("tolerance", fmt(s.tolerance));
    kv("flow_solver", s.flow_solver == coupling::FlowSolver::direct ? "direct" : "schur_cg");
    kv("flow_cg_tolerance", fmt(s.flow_cg_tolerance));
    kv("flow_cg_max_iter", std::to_string(s.flow_cg_max_iter));
    kv("warm_start", s.warm_start ? "true" : "false");
    kv("mpgp_tolerance", fmt(s.mpgp.tolerance));
    kv("mpgp_gamma", fmt(s.mpgp.gamma));
    if (s.mpgp.max_hessian_mults) kv("mpgp_max_hessian_mults", std::to_string(*s.mpgp.max_hessian_mults));
    if (s.mpgp.step_length) kv("mpgp_step_length", fmt(*s.mpgp.step_length));
    for (const auto& o : c.observations) {
        os << "\n[observation:" << o.name << "]\n";
        kv("point", fmt(o.where.x) + ", " + fmt(o.where.y));
    }
    const auto& o = c.output;
    os << "\n[output]\n";
    kv("directory", o.directory);
    kv("snapshot_times", detail::fmt_list(o.snapshot_times));
    kv("observations", o.observations);
    kv("steps", o.steps);
    kv("fields_prefix", o.fields_prefix);
    kv("config_echo", o.config_echo);
    kv("qp_trace", o.qp_trace ? "true" : "false");
    kv("qp_trace_file", o.qp_trace_file);
    return os.str();
}

}  // namespace hmfrac::cli
