#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "hmfrac/cli/scenario.hpp"

#ifndef HMFRAC_SCENARIO_DIR
#define HMFRAC_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace hmfrac;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;

/// A path, or the name of a shipped scenario ("terzaghi" → scenarios/terzaghi.ini).
fs::path resolve_config(const std::string& arg) {
    if (fs::exists(arg)) return arg;
    const fs::path shipped = fs::path(HMFRAC_SCENARIO_DIR) / (arg + ".ini");
    if (fs::exists(shipped)) return shipped;
    return arg;
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    bool trace_qp = false;
};

cli::ScenarioConfig load(const std::string& arg, const Overrides& o) {
    auto cfg = cli::parse_config(resolve_config(arg));
    if (o.seed) cfg.seed = *o.seed;
    if (o.output_dir) {
        cfg.output.directory = fs::absolute(*o.output_dir).string();
    }
    if (o.trace_qp) cfg.output.qp_trace = true;
    return cfg;
}

int run(const std::string& arg, const Overrides& o) {
    cli::ScenarioConfig cfg;
    try {
        cfg = load(arg, o);
    } catch (const Error& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return kConfigError;
    }
    cli::RunResult r;
    try {
        r = cli::run_scenario(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return kConfigError;
    } catch (const MeshError& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return kConfigError;
    } catch (const ParseError& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }
    const auto& t = r.trajectory;
    const auto& tot = t.final_state.totals;
    std::printf("%s: %zu steps to t = %g, %ld outer iterations, %ld flow iterations, %ld Hessian multiplications\n",
                cfg.name.c_str(), t.steps.empty() ? 0 : t.steps.size() - 1, t.final_state.time, tot.outer_iterations,
                tot.flow_iterations, tot.hessian_mults);
    std::printf("outputs in %s\n", r.directory.string().c_str());
    if (!t.ok) {
        std::cerr << "solver failure: " << t.error << '\n';
        return kSolverFailure;
    }
    return kOk;
}

int validate(const std::string& arg, const Overrides& o) {
    try {
        const auto cfg = load(arg, o);
        const auto errors = cli::validate_scenario(cfg);
        if (!errors.empty()) {
            std::cerr << "config error:\n";
            for (const auto& e : errors) std::cerr << e << '\n';
            return kConfigError;
        }
    } catch (const Error& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return kConfigError;
    }
    std::printf("ok\n");
    return kOk;
}

int mesh_info(const std::string& path) {
    mesh::MixedDimMesh m;
    try {
        m = mesh::load_mesh(path);
    } catch (const Error& e) {
        std::cerr << "mesh error: " << e.what() << '\n';
        return kConfigError;
    }
    const auto& topo = m.topology();
    std::map<std::string, std::size_t> faces;
    for (const auto& [f, tag] : m.boundary_tags()) ++faces[tag];
    std::printf("nodes %zu\ntriangles %zu\nfracture cells %zu\ntips %zu\nintersections %zu\narea %.17g\n", m.num_nodes(),
                m.num_triangles(), m.num_fractures(), topo.tip_nodes.size(), topo.intersection_nodes.size(),
                mesh::total_area(m));
    for (const auto& [tag, n] : faces) std::printf("tag %s %zu faces\n", tag.c_str(), n);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hydro-mechanical fractured porous media simulator"};
    app.require_subcommand(1);
    Overrides o;
    std::uint64_t seed = 0;
    std::string out_dir;
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides run.seed)");
    auto* dir_opt = app.add_option("--output-dir", out_dir, "output directory (overrides output.directory)");
    app.add_flag("--trace-qp", o.trace_qp, "write the per-iteration MPGP trace");

    std::string target;
    auto* run_cmd = app.add_subcommand("run", "run a scenario");
    run_cmd->add_option("config", target, "config file or shipped scenario name")->required();
    auto* validate_cmd = app.add_subcommand("validate", "check a scenario without running it");
    validate_cmd->add_option("config", target, "config file or shipped scenario name")->required();
    auto* info_cmd = app.add_subcommand("mesh-info", "summarize a mesh file");
    info_cmd->add_option("mesh", target, "mesh file")->required();
    app.fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    if (*seed_opt) o.seed = seed;
    if (*dir_opt) o.output_dir = out_dir;

    if (*run_cmd) return run(target, o);
    if (*validate_cmd) return validate(target, o);
    return mesh_info(target);
}
