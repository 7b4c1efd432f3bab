// Runs the eleven acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "hmfrac/cli/scenario.hpp"
#include "hmfrac/qp/dual.hpp"
#include "hmfrac/qp/mpgp.hpp"
#include "monolithic.hpp"
#include "oracles.hpp"

using namespace hmfrac;
namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const fs::path kScenarios = fs::path(HMFRAC_SOURCE_DIR) / "scenarios";

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num = std::max(num, std::abs(a[i] - b[i])), den = std::max(den, std::abs(b[i]));
    return num / std::max(den, 1e-300);
}

qp::BoxQP make_box(const MatrixXd& f, const VectorXd& d) {
    const auto n = static_cast<std::size_t>(d.size());
    return {linalg::LinearOperator::from_matrix(oracle::sparse(f)), oracle::stdvec(d), qp::Vector(n, 0.0),
            qp::Vector(n, qp::kInf)};
}

/// MPGP with every iterate checked: feasibility, monotone objective (against
/// a dense evaluation), exact Hessian accounting and the stopping test.
struct CheckedSolve {
    qp::MpgpResult result;
    std::vector<std::string> violations;
};

CheckedSolve checked_mpgp(const qp::BoxQP& box, const MatrixXd& f_dense, const VectorXd& d, qp::MpgpSettings s) {
    CheckedSolve out;
    const auto n = box.dimension();
    double prev = qp::kInf;
    int records = 0;
    s.observer = [&](const qp::MpgpIterate& it) {
        ++records;
        for (std::size_t j = 0; j < n; ++j)
            if (it.lambda[j] < box.lower[j] || it.lambda[j] > box.upper[j])
                out.violations.push_back(fmt("infeasible iterate %d", it.iteration));
        const Eigen::Map<const VectorXd> l(it.lambda.data(), static_cast<Eigen::Index>(n));
        const double obj = 0.5 * l.dot(f_dense * l) - d.dot(l);
        if (obj > prev + 1e-12 * (1.0 + std::abs(prev))) out.violations.push_back(fmt("objective rose at %d", it.iteration));
        prev = obj;
    };
    out.result = qp::mpgp_solve(box, qp::Vector(n, 0.0), s);
    const auto& r = out.result;
    if (!r.converged()) out.violations.push_back("not converged");
    if (records != r.iterations + 1) out.violations.push_back("iterate count");
    if (r.cg_steps + r.expansion_steps + r.proportioning_steps != r.iterations) out.violations.push_back("step kinds");
    if (r.hessian_mults != 1L + r.cg_steps + r.proportioning_steps + 2L * r.expansion_steps)
        out.violations.push_back("Hessian accounting");
    const double dn = d.norm();
    if (!(r.projected_gradient_norm < s.tolerance * (dn > 0.0 ? dn : 1.0))) out.violations.push_back("stopping test");
    return out;
}

struct QpStats {
    int problems = 0;
    int violating = 0;
    std::string first;
};

QpStats invariant_stats;

void record(const CheckedSolve& c) {
    ++invariant_stats.problems;
    if (!c.violations.empty()) {
        ++invariant_stats.violating;
        if (invariant_stats.first.empty()) invariant_stats.first = c.violations.front();
    }
}

Outcome criterion1() {
    Rng rng(1001);
    double worst = 0.0;
    int failed = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.index(12));
        const auto f = oracle::random_spd(n, rng, 0.05, 5.0);
        const auto d = oracle::random_vector(n, rng);
        const auto expected = oracle::enumerate_nonneg_qp(f, d);
        qp::MpgpSettings s;
        s.tolerance = 1e-12;
        s.max_hessian_mults = 5000;
        const auto c = checked_mpgp(make_box(f, d), f, d, s);
        record(c);
        const double scale = 1.0 + expected.cwiseAbs().maxCoeff();
        double err = 0.0;
        for (int j = 0; j < n; ++j) err = std::max(err, std::abs(c.result.lambda[static_cast<std::size_t>(j)] - expected(j)));
        worst = std::max(worst, err / scale);
        failed += !(c.result.converged() && err <= 1e-8 * scale);
    }
    return {failed == 0, fmt("200 instances, %d mismatches, worst error %.2e x (1 + |lambda*|inf)", failed, worst)};
}

Outcome criterion3() {
    Rng rng(3003);
    int failed = 0;
    double worst_kkt = 0.0, worst_ipm = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(19));
        const int m = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(std::min(n, 8))));
        const auto a = oracle::random_spd(n, rng, 0.5, 5.0);
        const auto b = oracle::random_vector(n, rng, 3.0);
        MatrixXd bi = MatrixXd::Zero(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                if (rng.uniform() < 0.4 || j == i) bi(i, j) = rng.normal();
        const auto c = oracle::random_vector(m, rng, 0.5);
        const auto dq = qp::dualize({oracle::sparse(a), oracle::stdvec(b), oracle::sparse(bi), oracle::stdvec(c)});
        // Dense dual for the invariant checks: F = B A⁻¹ Bᵀ, d = B A⁻¹ b − c.
        const MatrixXd ainv_bt = a.ldlt().solve(bi.transpose());
        const MatrixXd f = bi * ainv_bt;
        const VectorXd d = bi * a.ldlt().solve(b) - c;
        qp::MpgpSettings s;
        s.tolerance = 1e-12;
        s.max_hessian_mults = 5000;
        const auto solve = checked_mpgp(dq.box, f, d, s);
        record(solve);
        const auto x = oracle::vec(qp::recover_primal(dq, solve.result.lambda));
        const auto lam = oracle::vec(solve.result.lambda);
        const VectorXd slack = c - bi * x;
        const double stat = (a * x - b + bi.transpose() * lam).norm() / (1.0 + b.norm());
        const double feas = std::max(0.0, -slack.minCoeff()) / (1.0 + c.norm());
        double comp = 0.0;
        for (int i = 0; i < m; ++i) comp = std::max(comp, std::abs(lam(i) * slack(i)));
        comp /= 1.0 + lam.norm() * (1.0 + c.norm());
        const auto ipm = oracle::interior_point_qp(a, b, bi, c);
        const double gap = (x - ipm.x).norm() / (1.0 + ipm.x.norm());
        const double kkt = std::max({stat, feas, comp});
        worst_kkt = std::max(worst_kkt, kkt);
        worst_ipm = std::max(worst_ipm, gap);
        failed += !(solve.result.converged() && kkt <= 1e-6 && gap <= 1e-6 && lam.minCoeff() >= 0.0);
    }
    return {failed == 0,
            fmt("50 instances, %d failures, worst scaled KKT residual %.2e, worst gap to interior oracle %.2e", failed,
                worst_kkt, worst_ipm)};
}

Outcome criterion2() {
    // Extra problems with two-sided and free components.
    Rng rng(2002);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(30));
        const auto f = oracle::random_spd(n, rng, 0.01, 3.0);
        const auto d = oracle::random_vector(n, rng);
        auto box = make_box(f, d);
        for (std::size_t j = 0; j < box.dimension(); ++j) {
            const double kind = rng.uniform();
            if (kind < 0.3) box.upper[j] = rng.uniform(0.0, 0.5);
            if (kind > 0.85) box.lower[j] = -qp::kInf;
        }
        qp::MpgpSettings s;
        s.tolerance = 1e-10;
        s.max_hessian_mults = 5000;
        record(checked_mpgp(box, f, d, s));
    }
    const auto& st = invariant_stats;
    return {st.violating == 0 && st.problems == 300,
            fmt("%d problems, %d with violations%s%s", st.problems, st.violating, st.first.empty() ? "" : ", first: ",
                st.first.c_str())};
}

/// Unit-scale column (0, 0.1) × (0, 1): rollers on sides and base, drained top
/// loaded by a unit traction switched on after t = 0.
cli::ScenarioConfig column_config(int layers) {
    auto c = cli::parse_config(kScenarios / "terzaghi.ini");
    c.grid.ny = layers;
    return c;
}

Outcome criterion4() {
    const auto cfg = column_config(8);
    const auto model = cli::build_model(cfg, cli::build_mesh(cfg));
    coupling::SplittingSettings settings;
    settings.tolerance = 1e-13;
    settings.max_outer = 200;
    auto s = coupling::initial_state(model, settings);
    bool ok = true;
    double worst = 0.0, worst_ratio = 0.0, worst_spread = 0.0;
    for (double t : {0.01, 0.02, 0.05}) {
        const auto ref = oracle::monolithic_step(model, s, t);
        s = coupling::fixed_stress_step(model, s, t, settings);
        const auto& h = s.report.increment_history;
        if (!s.report.converged || h.size() < 5) {
            ok = false;
            continue;
        }
        const double q1 = h[h.size() - 3] / h[h.size() - 4], q2 = h[h.size() - 2] / h[h.size() - 3];
        worst_ratio = std::max(worst_ratio, q2);
        worst_spread = std::max(worst_spread, std::abs(q1 - q2));
        worst = std::max({worst, rel_diff(s.u, ref.u), rel_diff(s.p, ref.p), rel_diff(s.v, ref.v)});
    }
    ok = ok && worst_ratio < 0.9 && worst_spread < 0.05 && worst <= 1e-6;
    const double beta = assembly::stabilization(0.2, 60e9, 0.2);
    const bool beta_ok = std::abs(beta - 4.8e-13) <= 4.0 * std::numeric_limits<double>::epsilon() * 4.8e-13;
    return {ok && beta_ok, fmt("increment ratio %.3f (spread %.1e), gap to monolithic %.2e; beta = %.17g", worst_ratio,
                               worst_spread, worst, beta)};
}

Outcome criterion5() {
    auto cfg = column_config(64);
    cfg.output.directory = (fs::temp_directory_path() / "hmfrac_acceptance_terzaghi").string();
    const auto mesh = cli::build_mesh(cfg);
    const auto l = assembly::lame(1.0, 0.25);
    const double mod = l.lambda + l.two_mu;
    const double p0 = 1.0 / (mod * 0.1 + 1.0), cv = 1.0 / (0.1 + 1.0 / mod);
    const std::vector<double> samples{0.01, 0.02, 0.05, 0.1, 0.5};
    std::vector<double> errors;
    const auto start = std::chrono::steady_clock::now();
    const auto r = cli::run_scenario(cfg, [&](const coupling::SimulationState& s) {
        for (double t : samples) {
            if (std::abs(s.time - t) > 1e-12) continue;
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
                const auto g = mesh::triangle_geometry(mesh, k);
                const double exact = oracle::terzaghi_pressure(1.0 - g.centroid.y, t, 1.0, p0, cv);
                num += g.area * std::pow(s.p[k] - exact, 2);
                den += g.area * exact * exact;
            }
            errors.push_back(std::sqrt(num / den));
        }
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double worst = 0.0;
    for (double e : errors) worst = std::max(worst, e);
    return {r.trajectory.ok && errors.size() == samples.size() && worst < 0.02 && seconds < 10.0,
            fmt("64 cells, %zu sampled times, worst relative L2 error %.4f, %.1f s", errors.size(), worst, seconds)};
}

Outcome criterion6() {
    assembly::HmParameters p;
    p.fluid = {1000.0, 9.81, 1e-3};
    p.fracture.roughness = 0.01;
    const double k4 = p.fracture_conductivity(1e-4), k6 = p.fracture_conductivity(1e-6);
    const double e4 = std::abs(k4 - 8.175e-5) / 8.175e-5, e6 = std::abs(k6 - 8.175e-9) / 8.175e-9;
    return {e4 <= 1e-14 && e6 <= 1e-14, fmt("k_f(1e-4) = %.17g, k_f(1e-6) = %.17g", k4, k6)};
}

Outcome criterion7() {
    cli::ExcavationConfig e;
    e.enabled = true;
    const auto c = cli::excavation_coefficients(e);
    const double r_in = e.radius + e.l_in, r_out = e.radius + e.l_out;
    const double band_in = c.c1 * std::exp(c.c2 * r_in), band_out = c.c1 * std::exp(c.c2 * r_out);
    const double flat_in = cli::excavation_profile(e, r_in - 1e-12), flat_out = cli::excavation_profile(e, r_out + 1e-12);
    const double gap_in = std::max(std::abs(band_in - 1e-8), std::abs(flat_in - 1e-8)) / 1e-8;
    const double gap_out = std::max(std::abs(band_out - 3e-13), std::abs(flat_out - 3e-13)) / 3e-13;
    return {gap_in <= 1e-12 && gap_out <= 1e-12,
            fmt("relative gaps %.1e at R + L_in, %.1e at R + L_out", gap_in, gap_out)};
}

/// Everything the excavation criteria read from one run.
struct ExcavationRun {
    bool ok = false;
    std::string error;
    double delta_min = 0.0;
    double min_aperture = qp::kInf;
    double max_clamped_fraction = 0.0;
    std::vector<double> times;
    std::vector<double> above;  // pressure at the "above" observation point
    std::vector<coupling::StepReport> steps;
    long hessian_mults = 0;
    fs::path step_csv;
    double seconds = 0.0;
};

ExcavationRun run_excavation(const std::string& scenario, bool warm, const std::string& tag) {
    auto cfg = cli::parse_config(kScenarios / (scenario + ".ini"));
    cfg.splitting.warm_start = warm;
    cfg.output.directory = (fs::temp_directory_path() / ("hmfrac_acceptance_" + tag)).string();
    cfg.output.snapshot_times.clear();
    ExcavationRun out;
    out.delta_min = cfg.params.fracture.delta_min;
    const auto mesh = cli::build_mesh(cfg);
    const cli::ObservationSampler probe(mesh, {{"above", {20.0, 3.0}}});
    const auto start = std::chrono::steady_clock::now();
    const auto r = cli::run_scenario(cfg, [&](const coupling::SimulationState& s) {
        std::size_t clamped = 0;
        for (double a : s.fracture.aperture) {
            out.min_aperture = std::min(out.min_aperture, a);
            clamped += a <= out.delta_min * (1.0 + 1e-9);
        }
        if (!s.fracture.aperture.empty())
            out.max_clamped_fraction = std::max(
                out.max_clamped_fraction, static_cast<double>(clamped) / static_cast<double>(s.fracture.aperture.size()));
        out.times.push_back(s.time);
        out.above.push_back(probe.sample(s).at(0).pressure);
    });
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.ok = r.trajectory.ok;
    out.error = r.trajectory.error;
    out.steps = r.trajectory.steps;
    out.hessian_mults = r.trajectory.final_state.totals.hessian_mults;
    out.step_csv = r.directory / cfg.output.steps;
    return out;
}

Outcome criterion8(const ExcavationRun& ex) {
    auto cfg = cli::parse_config(kScenarios / "single_fracture.ini");
    cfg.output.directory = (fs::temp_directory_path() / "hmfrac_acceptance_single_fracture").string();
    const double dmin = cfg.params.fracture.delta_min;
    double single_min = qp::kInf, single_clamped = 0.0;
    const auto r = cli::run_scenario(cfg, [&](const coupling::SimulationState& s) {
        std::size_t clamped = 0;
        for (double a : s.fracture.aperture) {
            single_min = std::min(single_min, a);
            clamped += a <= dmin * (1.0 + 1e-9);
        }
        single_clamped = std::max(single_clamped, static_cast<double>(clamped) / static_cast<double>(s.fracture.aperture.size()));
    });
    const bool bounds = r.trajectory.ok && ex.ok && single_min >= dmin - 1e-10 && ex.min_aperture >= ex.delta_min - 1e-10;
    return {bounds && ex.max_clamped_fraction > 0.0,
            fmt("single_fracture: min aperture %.6g (delta_min %.3g), clamped fraction %.2f; excavation2d: min aperture "
                "%.4g (delta_min %.3g), clamped fraction %.3f",
                single_min, dmin, single_clamped, ex.min_aperture, ex.delta_min, ex.max_clamped_fraction)};
}

Outcome criterion9(const ExcavationRun& ex) {
    if (!ex.ok || ex.above.empty()) return {false, "run failed: " + ex.error};
    const double front_time = 20.0;  // front reaches x = 20 at 1 m/day
    const double p0 = ex.above.front();
    double peak = p0, peak_time = 0.0, at_front = p0;
    for (std::size_t k = 0; k < ex.times.size(); ++k) {
        if (ex.times[k] <= front_time && ex.above[k] > peak) peak = ex.above[k], peak_time = ex.times[k];
        if (ex.times[k] <= front_time) at_front = ex.above[k];
    }
    // After the front the head settles at the drained value; wiggles below
    // 1e-4 of the initial head count as settled, not as a rise.
    const double floor = 1e-4 * std::abs(p0);
    double later_max = -qp::kInf;
    for (std::size_t k = 0; k < ex.times.size(); ++k)
        if (ex.times[k] > front_time) later_max = std::max(later_max, ex.above[k]);
    const double last = ex.above.back();
    const bool decays = at_front < peak && later_max <= at_front + floor && last < 0.01 * p0;
    return {peak > p0 && decays,
            fmt("initial %.3f m, peak %.3f m at t = %g d, %.3f m when the front passes, at most %.4f m after, %.4f m "
                "at the end",
                p0, peak, peak_time, at_front, later_max, last)};
}

Outcome criterion10(const ExcavationRun& warm, const ExcavationRun& cold) {
    std::size_t rows = 0;
    std::ifstream csv(warm.step_csv);
    std::string line;
    std::getline(csv, line);
    const bool header = line == coupling::kStepCsvHeader;
    while (std::getline(csv, line)) ++rows;
    return {warm.ok && cold.ok && warm.hessian_mults <= cold.hessian_mults && header && rows == warm.steps.size(),
            fmt("Hessian multiplications warm %ld, cold %ld; step CSV with %zu rows (%.1f s warm, %.1f s cold)",
                warm.hessian_mults, cold.hessian_mults, rows, warm.seconds, cold.seconds)};
}

Outcome criterion11(const ExcavationRun& ex) {
    if (!ex.ok) return {false, "run failed: " + ex.error};
    int worst_later = 0;
    bool converged = true;
    for (std::size_t k = 2; k < ex.steps.size(); ++k) {
        worst_later = std::max(worst_later, ex.steps[k].outer_iterations);
        converged = converged && ex.steps[k].converged;
    }
    const int first = ex.steps.size() > 1 ? ex.steps[1].outer_iterations : 0;
    return {converged && worst_later <= 6,
            fmt("first step %d outer iterations, later steps at most %d (%zu steps)", first, worst_later,
                ex.steps.size() - 1)};
}

}  // namespace

int main() {
    // Criterion 2 checks the problems of criteria 1 and 3, so those run first;
    // lines are printed in criterion order.
    std::vector<std::pair<const char*, Outcome>> lines(12);
    auto run = [&](int id, const char* title, const std::function<Outcome()>& f) {
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        lines[static_cast<std::size_t>(id)] = {title, o};
    };
    run(1, "QP oracle equivalence", criterion1);
    run(3, "dual/primal KKT", criterion3);
    run(2, "MPGP invariants", criterion2);
    run(4, "fixed-stress convergence", criterion4);
    run(5, "Terzaghi verification", criterion5);
    run(6, "cubic-law numbers", criterion6);
    run(7, "excavation conductivity continuity", criterion7);

    const auto warm = run_excavation("excavation2d", true, "excavation2d_warm");
    const auto cold = run_excavation("excavation2d", false, "excavation2d_cold");
    run(8, "contact under compression", [&] { return criterion8(warm); });
    run(9, "pressure sign pattern", [&] { return criterion9(warm); });
    run(10, "warm-start benefit", [&] { return criterion10(warm, cold); });
    run(11, "outer-iteration envelope", [&] { return criterion11(warm); });

    int failed = 0;
    for (int id = 1; id <= 11; ++id) {
        const auto& [title, o] = lines[static_cast<std::size_t>(id)];
        failed += !o.pass;
        std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
    }

    const auto soft = run_excavation("excavation2d_soft", true, "excavation2d_soft_warm");
    const auto soft_cold = run_excavation("excavation2d_soft", false, "excavation2d_soft_cold");
    std::printf("note: excavation2d_soft (E_f = 6 MPa): min aperture %.4g, clamped fraction %.3f, Hessian "
                "multiplications warm %ld, cold %ld\n",
                soft.min_aperture, soft.max_clamped_fraction, soft.hessian_mults, soft_cold.hessian_mults);
    std::printf("%d of 11 criteria failed\n", failed);
    return failed;
}
