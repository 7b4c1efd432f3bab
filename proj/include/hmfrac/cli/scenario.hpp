#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "hmfrac/cli/config.hpp"
#include "hmfrac/coupling/simulation.hpp"
#include "hmfrac/mesh/io.hpp"

namespace hmfrac::cli {

/// k^e(r) = c₁ e^{c₂ r} on the transition band, continuous with k₁ at
/// R + L_in and with k₀ at R + L_out.
struct ExcavationCoefficients {
    double c1;
    double c2;
};

inline ExcavationCoefficients excavation_coefficients(const ExcavationConfig& e) {
    if (!(e.k0 > 0.0) || !(e.k1 > 0.0)) throw ConfigError("excavation conductivities k0 and k1 must be positive");
    if (!(e.l_in < e.l_out)) throw ConfigError("excavation needs l_in < l_out");
    const double c2 = std::log(e.k0 / e.k1) / (e.l_out - e.l_in);
    return {e.k1 * std::exp(-c2 * (e.radius + e.l_in)), c2};
}

/// Conductivity at distance r from the borehole axis inside the excavated zone.
inline double excavation_profile(const ExcavationConfig& e, double r) {
    if (r <= e.radius + e.l_in) return e.k1;
    if (r >= e.radius + e.l_out) return e.k0;
    const auto c = excavation_coefficients(e);
    return c.c1 * std::exp(c.c2 * r);
}

/// Matrix conductivity at x and time t: the profile inside
/// origin < x₁ < min(origin + speed·t, origin + length), k₀ elsewhere.
inline double excavation_conductivity(const ExcavationConfig& e, Point x, double t) {
    const double front = std::min(e.origin + e.speed * t, e.origin + e.length);
    if (!(x.x > e.origin && x.x < front)) return e.k0;
    return excavation_profile(e, std::abs(x.y - e.axis_y));
}

inline mesh::MixedDimMesh build_mesh(const ScenarioConfig& c) {
    if (c.mesh_file) {
        const std::filesystem::path p(*c.mesh_file);
        return mesh::load_mesh((p.is_absolute() ? p : c.base_dir / p).string());
    }
    return mesh::generate_rect_dfm(c.grid, c.seed);
}

/// Cross-checks the configuration against the mesh: every mesh tag has a
/// boundary section and vice versa, observation points lie inside, snapshot
/// times are time levels.
inline std::vector<std::string> check_against_mesh(const ScenarioConfig& c, const mesh::MixedDimMesh& m) {
    std::vector<std::string> errors;
    std::set<std::string> mesh_tags;
    for (const auto& [face, tag] : m.boundary_tags()) mesh_tags.insert(tag);
    for (const auto& t : mesh_tags)
        if (!c.tags.count(t)) errors.push_back("boundary:" + t + ": mesh tag has no boundary section");
    for (const auto& [name, t] : c.tags)
        if (!mesh_tags.count(name)) errors.push_back("boundary:" + name + ": tag not present in the mesh");
    for (const auto& o : c.observations)
        if (!mesh::locate(m, o.where, 1e-9)) errors.push_back("observation:" + o.name + ".point: outside the domain");
    const auto times = c.time.times();
    const double tol = 1e-9 * std::max(1.0, c.time.final_time());
    for (double s : c.output.snapshot_times) {
        const bool hit = std::abs(s) <= tol ||
                         std::any_of(times.begin(), times.end(), [&](double t) { return std::abs(t - s) <= tol; });
        if (!hit) errors.push_back("output.snapshot_times: " + detail::fmt(s) + " is not a time level");
    }
    return errors;
}

inline coupling::Model build_model(const ScenarioConfig& c, mesh::MixedDimMesh m) {
    auto params = c.params;
    if (c.excavation.enabled) {
        const auto e = c.excavation;
        excavation_coefficients(e);
        params.conductivity_field = [e](Point x, double t, int) { return excavation_conductivity(e, x, t); };
    }
    auto mpgp = c.splitting.mpgp;
    mpgp.norm_estimate_seed = c.seed;
    return coupling::Model(std::move(m), std::move(params), c.tags, mpgp);
}

/// One row of the observation CSV.
struct ObservationRecord {
    double time;
    std::string point;
    double pressure;   // pressure head of the containing triangle (P0)
    Point displacement;  // P1 interpolation
    double aperture;   // of the nearest fracture cell, 0 without fractures
};

inline constexpr const char* kObservationCsvHeader = "time,point,pressure,ux,uy,aperture";

/// Point sampler fixed to a mesh: containing triangle, barycentric weights
/// and nearest fracture cell.
class ObservationSampler {
public:
    ObservationSampler(const mesh::MixedDimMesh& m, std::vector<ObservationPoint> points) : points_(std::move(points)) {
        for (const auto& p : points_) {
            const auto t = mesh::locate(m, p.where, 1e-9);
            if (!t) throw ConfigError("observation:" + p.name + ".point: outside the domain");
            Probe pr;
            pr.triangle = *t;
            pr.weights = mesh::barycentric(m, *t, p.where);
            pr.nodes = m.triangles()[*t].nodes;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < m.num_fractures(); ++e) {
                const auto& c = m.fractures()[e];
                const Point a = m.nodes()[c.nodes[0]], b = m.nodes()[c.nodes[1]];
                const double s = std::clamp(dot(p.where - a, b - a) / dot(b - a, b - a), 0.0, 1.0);
                const double d = norm(p.where - (a + s * (b - a)));
                if (d < best) best = d, pr.fracture = static_cast<long>(e);
            }
            probes_.push_back(pr);
        }
    }

    std::vector<ObservationRecord> sample(const coupling::SimulationState& s) const {
        std::vector<ObservationRecord> out;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& pr = probes_[i];
            ObservationRecord r{s.time, points_[i].name, s.p.at(pr.triangle), {0.0, 0.0}, 0.0};
            for (int k = 0; k < 3; ++k) {
                const auto v = pr.nodes[static_cast<std::size_t>(k)];
                const double w = pr.weights[static_cast<std::size_t>(k)];
                r.displacement.x += w * s.u.at(2 * v);
                r.displacement.y += w * s.u.at(2 * v + 1);
            }
            if (pr.fracture >= 0) r.aperture = s.fracture.aperture.at(static_cast<std::size_t>(pr.fracture));
            out.push_back(std::move(r));
        }
        return out;
    }

    const std::vector<ObservationPoint>& points() const { return points_; }

private:
    struct Probe {
        std::size_t triangle = 0;
        std::array<double, 3> weights{};
        std::array<std::size_t, 3> nodes{};
        long fracture = -1;
    };
    std::vector<ObservationPoint> points_;
    std::vector<Probe> probes_;
};

inline void write_observation_row(std::ostream& os, const ObservationRecord& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g,%.17g,%.17g\n", r.time, r.point.c_str(), r.pressure,
                  r.displacement.x, r.displacement.y, r.aperture);
    os << buf;
}

/// Legacy ASCII VTK unstructured grid: triangles then fracture lines. Cell
/// data pressure, aperture (0 on triangles), conductivity in input units
/// (m/s when time_scale converts to days) and contact_active; point data
/// displacement.
inline void write_fields(std::ostream& os, const coupling::Model& model, const coupling::SimulationState& s) {
    const auto& m = model.mesh;
    const auto nt = m.num_triangles(), nf = m.num_fractures(), nn = m.num_nodes();
    char buf[160];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "# vtk DataFile Version 3.0\n";
    os << "hmfrac step " << s.step << " time " << num(s.time) << "\n";
    os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nn << " double\n";
    for (const auto& p : m.nodes()) os << num(p.x) << ' ' << num(p.y) << " 0\n";
    os << "CELLS " << nt + nf << ' ' << 4 * nt + 3 * nf << '\n';
    for (const auto& t : m.triangles()) os << "3 " << t.nodes[0] << ' ' << t.nodes[1] << ' ' << t.nodes[2] << '\n';
    for (const auto& c : m.fractures()) os << "2 " << c.nodes[0] << ' ' << c.nodes[1] << '\n';
    os << "CELL_TYPES " << nt + nf << '\n';
    for (std::size_t i = 0; i < nt; ++i) os << "5\n";
    for (std::size_t i = 0; i < nf; ++i) os << "3\n";
    os << "CELL_DATA " << nt + nf << '\n';
    os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < nt + nf; ++i) os << num(s.p.at(i)) << '\n';
    os << "SCALARS aperture double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < nt; ++i) os << "0\n";
    for (std::size_t e = 0; e < nf; ++e) os << num(s.fracture.aperture.at(e)) << '\n';
    const double ts = model.params.time_scale;
    os << "SCALARS conductivity double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < nt; ++i) {
        const auto g = mesh::triangle_geometry(m, i);
        os << num(model.params.matrix_conductivity(m.triangles()[i].region, g.centroid, s.time) / ts) << '\n';
    }
    for (std::size_t e = 0; e < nf; ++e) os << num(s.fracture.conductivity.at(e) / ts) << '\n';
    os << "SCALARS contact_active int 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < nt; ++i) os << "0\n";
    for (std::size_t e = 0; e < nf; ++e) os << (s.fracture.contact_active.at(e) ? 1 : 0) << '\n';
    os << "POINT_DATA " << nn << '\n';
    os << "VECTORS displacement double\n";
    for (std::size_t v = 0; v < nn; ++v) os << num(s.u.at(2 * v)) << ' ' << num(s.u.at(2 * v + 1)) << " 0\n";
}

inline void write_fields(const std::filesystem::path& path, const coupling::Model& model,
                         const coupling::SimulationState& s) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    write_fields(os, model, s);
    if (!os) throw Error("failed writing '" + path.string() + "'");
}

struct RunResult {
    coupling::Trajectory trajectory;
    std::filesystem::path directory;
    std::vector<std::filesystem::path> files;
};

/// Runs a scenario and writes, into the output directory: the resolved
/// config, the observation CSV, the per-step CSV, VTK snapshots at the
/// configured times and optionally the MPGP trace. Configuration and mesh
/// problems throw; solver failures end the run with the partial outputs kept
/// and trajectory.ok = false. `observer` sees every state after it is written.
inline RunResult run_scenario(const ScenarioConfig& c, const coupling::Observer& observer = {}) {
    RunResult res;
    auto mesh = build_mesh(c);
    if (const auto errors = check_against_mesh(c, mesh); !errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
        throw ConfigError(msg);
    }
    const std::filesystem::path out_dir = std::filesystem::absolute(c.output.directory);
    std::filesystem::create_directories(out_dir);
    res.directory = out_dir;
    auto open = [&](const std::string& name) {
        res.files.push_back(out_dir / name);
        std::ofstream os(res.files.back());
        if (!os) throw Error("cannot open '" + res.files.back().string() + "' for writing");
        return os;
    };
    {
        auto echo = open(c.output.config_echo);
        echo << resolved_config(c);
    }

    auto obs_csv = open(c.output.observations);
    auto step_csv = open(c.output.steps);
    obs_csv << kObservationCsvHeader << '\n';
    step_csv << coupling::kStepCsvHeader << '\n';
    std::optional<std::ofstream> trace_file;
    std::optional<qp::MpgpTraceWriter> trace;
    auto settings = c.splitting;
    settings.mpgp.norm_estimate_seed = c.seed;
    if (c.output.qp_trace) {
        trace_file.emplace(open(c.output.qp_trace_file));
        trace.emplace(*trace_file);
        settings.mpgp.observer = trace->all_solves();
    }

    coupling::Model model = [&] {
        try {
            return build_model(c, std::move(mesh));
        } catch (const SolverError&) {
            throw;
        } catch (const FactorizationError& e) {
            throw SolverError(e.what());
        }
    }();
    const ObservationSampler probes(model.mesh, c.observations);
    const double tol = 1e-9 * std::max(1.0, c.time.final_time());
    std::size_t snapshot = 0;

    res.trajectory = coupling::run_simulation(model, c.time, settings, [&](const coupling::SimulationState& s) {
        for (const auto& r : probes.sample(s)) write_observation_row(obs_csv, r);
        coupling::write_step_row(step_csv, s.report);
        obs_csv.flush();
        step_csv.flush();
        for (double t : c.output.snapshot_times) {
            if (std::abs(t - s.time) > tol) continue;
            char name[80];
            std::snprintf(name, sizeof name, "_%03zu.vtk", snapshot++);
            res.files.push_back(out_dir / (c.output.fields_prefix + name));
            write_fields(res.files.back(), model, s);
        }
        if (observer) observer(s);
    });
    return res;
}

/// Every ConfigError line of a scenario, or empty when it would run.
inline std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
    try {
        const auto m = build_mesh(c);
        return check_against_mesh(c, m);
    } catch (const Error& e) {
        return {e.what()};
    }
}

}  // namespace hmfrac::cli
