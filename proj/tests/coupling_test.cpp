#include <gtest/gtest.h>

#include <sstream>

#include "hmfrac/coupling/simulation.hpp"
#include "hmfrac/mesh/generator.hpp"
#include "monolithic.hpp"
#include "oracles.hpp"

using namespace hmfrac;
using namespace hmfrac::coupling;
using assembly::HmParameters;
using mesh::BoundaryTags;
using mesh::FlowBcKind;
using mesh::MechBcKind;

namespace {

mesh::BoundaryTag tag(std::string name, FlowBcKind flow, MechBcKind mech) {
    mesh::BoundaryTag t;
    t.name = std::move(name);
    t.flow.kind = flow;
    t.mech.kind = mech;
    return t;
}

mesh::Schedule step_on() {
    mesh::Schedule s;
    s.kind = mesh::Schedule::Kind::ramp;
    return s;
}

/// Unit-scale poroelastic data; fractures much softer than the matrix.
HmParameters unit_params() {
    HmParameters p;
    p.materials[0] = assembly::Material{1.0, 0.25, 1.0, 0.1, 1.0, {}};
    p.fracture.young = 0.01;
    p.fracture.poisson = 0.25;
    p.fracture.biot = 1.0;
    p.fracture.storativity = 0.1;
    p.fracture.delta_min = 0.01;
    p.fluid = {1.0, 1.0, 1.0 / 12.0};  // k_f = a²
    return p;
}

/// Column (0, w) × (0, h): rollers on sides and base, no flow except at the top.
BoundaryTags column_tags(double load, FlowBcKind top_flow = FlowBcKind::dirichlet, double top_pressure = 0.0) {
    BoundaryTags t;
    for (const char* s : {"left", "right", "bottom"}) t[s] = tag(s, FlowBcKind::neumann, MechBcKind::roller);
    t["top"] = tag("top", top_flow, MechBcKind::neumann);
    t["top"].mech.value.vector = {0.0, -load};
    t["top"].mech.schedule = step_on();
    t["top"].flow.value = top_pressure;
    t["top"].flow.schedule = step_on();
    return t;
}

mesh::MixedDimMesh column_mesh(int layers, double width = 0.1, double height = 1.0) {
    mesh::GridSpec g;
    g.extent = {0.0, 0.0, width, height};
    g.nx = 1;
    g.ny = layers;
    return mesh::generate_rect_dfm(g);
}

/// Unit square, 4×4, with a horizontal fracture crossing it; sides on rollers,
/// drained at the top, which carries a constant downward load.
Model fracture_square(HmParameters p, double load = 0.0, double delta = 0.1) {
    mesh::GridSpec g;
    g.nx = g.ny = 4;
    g.fractures.push_back({{0.0, 0.5}, {1.0, 0.5}, delta});
    BoundaryTags t;
    for (const char* s : {"left", "right", "bottom"}) t[s] = tag(s, FlowBcKind::neumann, MechBcKind::roller);
    t["top"] = tag("top", FlowBcKind::dirichlet, load == 0.0 ? MechBcKind::roller : MechBcKind::neumann);
    t["top"].mech.value.vector = {0.0, -load};
    return Model(mesh::generate_rect_dfm(g), std::move(p), std::move(t));
}

double max_abs(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]), den += b[i] * b[i];
    return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST(TimeScheme, StepsCoverIntervals) {
    const TimeScheme s{{{40.0, 1.0}, {120.0, 5.0}, {360.0, 15.0}}};
    const auto t = s.times();
    EXPECT_EQ(t.size(), 40u + 16u + 16u);
    EXPECT_EQ(t.front(), 1.0);
    EXPECT_EQ(t[40], 45.0);
    EXPECT_EQ(t.back(), 360.0);
    const auto u = TimeScheme{{{1.0, 0.3}}}.times();
    ASSERT_EQ(u.size(), 4u);
    EXPECT_DOUBLE_EQ(u[2], 0.9);
    EXPECT_EQ(u[3], 1.0);
    EXPECT_THROW((TimeScheme{{{1.0, 0.1}, {1.0, 0.1}}}.times()), Error);
    EXPECT_THROW((TimeScheme{{{1.0, 0.0}}}.times()), Error);
}

TEST(InitialState, ZeroDataGivesZeroState) {
    const Model m = fracture_square(unit_params());
    const auto s = initial_state(m);
    EXPECT_EQ(max_abs(s.u), 0.0);
    EXPECT_EQ(max_abs(s.p), 0.0);
    EXPECT_EQ(max_abs(s.v), 0.0);
    const auto run = run_simulation(m, {{{0.3, 0.1}}}, {});
    ASSERT_TRUE(run.ok) << run.error;
    EXPECT_EQ(run.steps.size(), 4u);
    EXPECT_EQ(max_abs(run.final_state.u), 0.0);
    EXPECT_EQ(max_abs(run.final_state.p), 0.0);
}

TEST(InitialState, UniformDirichletPressure) {
    auto m = fracture_square(unit_params());
    for (auto& [name, t] : m.tags) {
        t.flow.kind = FlowBcKind::dirichlet;
        t.flow.value = 300.0;
    }
    const Model model(m.mesh, m.params, m.tags);
    const auto s = initial_state(model);
    for (double p : s.p) EXPECT_NEAR(p, 300.0, 1e-9);
    EXPECT_LE(max_abs(s.v), 1e-9);
}

TEST(Mechanics, InactiveContactMatchesUnconstrainedSolve) {
    auto p = unit_params();
    p.initial_stress = {0.02, 0.02, 0.0};  // tension opens the fracture
    const Model m = fracture_square(p);
    const auto rhs = m.rhs(0.0);
    const Vector zero_p(m.dofs.num_pressure(), 0.0);
    const auto r = solve_mechanics(m, rhs, zero_p, {});
    EXPECT_EQ(max_abs(r.lambda), 0.0);
    const auto& fr = m.dofs.free_displacement;
    Vector b(fr.size());
    for (std::size_t k = 0; k < fr.size(); ++k) b[k] = rhs.f1[fr[k]];
    const auto u = linalg::factor_spd(m.forms.a.select(fr, fr)).solve(b);
    for (std::size_t k = 0; k < fr.size(); ++k) EXPECT_NEAR(r.u[fr[k]], u[k], 1e-12 * max_abs(u));
    const auto s = m.fracture_state(r.u);
    for (std::size_t e = 0; e < m.mesh.num_fractures(); ++e) EXPECT_GT(s.aperture[e], 0.1);
}

TEST(Mechanics, CompressionMatchesDenseKktOracle) {
    const Model m = fracture_square(unit_params(), 0.05);
    const auto rhs = m.rhs(0.0);
    const Vector zero_p(m.dofs.num_pressure(), 0.0);
    qp::MpgpSettings tight;
    tight.tolerance = 1e-12;
    const auto r = solve_mechanics(m, rhs, zero_p, {}, tight);
    EXPECT_GT(max_abs(r.lambda), 0.0);

    const auto& fr = m.dofs.free_displacement;
    Eigen::VectorXd b(static_cast<Eigen::Index>(fr.size()));
    for (std::size_t k = 0; k < fr.size(); ++k) b(static_cast<Eigen::Index>(k)) = rhs.f1[fr[k]];
    std::vector<std::size_t> rows(m.mesh.num_fractures());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto ref = oracle::interior_point_qp(oracle::dense(m.forms.a.select(fr, fr)), b,
                                               oracle::dense(m.contact.bi.select(rows, fr)), oracle::vec(m.contact.ci));
    double uscale = ref.x.cwiseAbs().maxCoeff(), lscale = ref.lambda.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < fr.size(); ++k)
        EXPECT_NEAR(r.u[fr[k]], ref.x(static_cast<Eigen::Index>(k)), 1e-8 * uscale);
    for (std::size_t i = 0; i < rows.size(); ++i)
        EXPECT_NEAR(r.lambda[i], ref.lambda(static_cast<Eigen::Index>(i)), 1e-6 * lscale);
    const auto s = m.fracture_state(r.u);
    std::size_t active = 0;
    for (std::size_t e = 0; e < s.aperture.size(); ++e) {
        EXPECT_GE(s.aperture[e], m.params.fracture.delta_min - 1e-12);
        active += s.contact_active[e];
    }
    EXPECT_GT(active, 0u);
}

TEST(Mechanics, WarmStartAtSolutionNeedsOneMultiplication) {
    const Model m = fracture_square(unit_params(), 0.05);
    const auto rhs = m.rhs(0.0);
    const Vector zero_p(m.dofs.num_pressure(), 0.0);
    const auto first = solve_mechanics(m, rhs, zero_p, {});
    const auto second = solve_mechanics(m, rhs, zero_p, first.lambda);
    EXPECT_LE(second.qp.hessian_mults, 1);
    EXPECT_LE(rel_diff(second.u, first.u), 1e-12);
}

TEST(Flow, ColumnApproachesFiniteDifferenceOracle) {
    // Decoupled diffusion s ∂p/∂t = k ∂²p/∂y²; the triangle column (square
    // cells) and the 1D cell-centred scheme differ by O(h²).
    auto p = unit_params();
    p.materials[0].biot = 0.0;
    p.materials[0].storativity = 1.0;
    const double dt = 0.01;
    const int steps = 10;
    std::vector<double> gaps;
    for (int n : {8, 16, 32}) {
        const Model m(column_mesh(n, 1.0 / n), p, column_tags(0.0, FlowBcKind::dirichlet, 1.0));
        SimulationState s = initial_state(m);
        for (int k = 1; k <= steps; ++k) s = fixed_stress_step(m, s, k * dt);
        const auto fd = oracle::column_diffusion_fd(n, 1.0, 1.0, 1.0, 1.0, dt, steps);
        std::vector<double> row(static_cast<std::size_t>(n), 0.0), area(static_cast<std::size_t>(n), 0.0);
        for (std::size_t c = 0; c < m.mesh.num_triangles(); ++c) {
            const auto g = mesh::triangle_geometry(m.mesh, c);
            const auto j = static_cast<std::size_t>(g.centroid.y * n);
            row[j] += g.area * s.p[c];
            area[j] += g.area;
        }
        double gap = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) gap = std::max(gap, std::abs(row[j] / area[j] - fd[j]));
        gaps.push_back(gap);
    }
    EXPECT_LT(gaps[0], 1e-2);
    EXPECT_GT(gaps[0] / gaps[1], 3.0);
    EXPECT_GT(gaps[1] / gaps[2], 3.0);
}

TEST(Flow, SchurCgMatchesDirectSolve) {
    Model m = fracture_square(unit_params(), 0.05);
    m.tags["top"].flow.value = 2.0;
    const Model model(m.mesh, m.params, m.tags);
    const auto s0 = initial_state(model);
    SplittingSettings direct, cg;
    cg.flow_solver = FlowSolver::schur_cg;
    cg.flow_cg_tolerance = 1e-14;
    const auto a = fixed_stress_step(model, s0, 0.1, direct);
    const auto b = fixed_stress_step(model, s0, 0.1, cg);
    EXPECT_LE(rel_diff(b.p, a.p), 1e-9);
    EXPECT_LE(rel_diff(b.u, a.u), 1e-9);
    EXPECT_GT(b.report.flow_iterations, a.report.flow_iterations);
}

TEST(Flow, StorageScalesLinearly) {
    auto p = unit_params();
    const Model a = fracture_square(p);
    p.materials[0].storativity *= 2.0;
    p.fracture.storativity *= 2.0;
    const Model b = fracture_square(p);
    EXPECT_LE(linalg::add(a.forms.c, b.forms.c, 2.0, -1.0).max_abs(), 1e-15);
}

TEST(FixedStress, DecoupledProblemNeedsOneIteration) {
    auto p = unit_params();
    p.materials[0].biot = 0.0;
    p.fracture.biot = 0.0;
    const Model m(column_mesh(8), p, column_tags(1.0, FlowBcKind::dirichlet, 1.0));
    const auto run = run_simulation(m, {{{0.05, 0.01}}}, {});
    ASSERT_TRUE(run.ok) << run.error;
    for (std::size_t k = 1; k < run.steps.size(); ++k) {
        EXPECT_EQ(run.steps[k].outer_iterations, 1);
        EXPECT_TRUE(run.steps[k].converged);
    }
}

TEST(FixedStress, LinearBiotColumnContractsToMonolithicSolution) {
    const Model m(column_mesh(8), unit_params(), column_tags(1.0));
    SplittingSettings settings;
    settings.tolerance = 1e-13;
    settings.max_outer = 200;
    SimulationState s = initial_state(m, settings);
    for (double t : {0.01, 0.02, 0.05}) {
        const auto oracle_step = oracle::monolithic_step(m, s, t);
        s = fixed_stress_step(m, s, t, settings);
        ASSERT_TRUE(s.report.converged);
        const auto& h = s.report.increment_history;
        ASSERT_GE(h.size(), 5u);
        // Geometric contraction: increment ratios settle on a constant below one.
        const double q1 = h[h.size() - 3] / h[h.size() - 4], q2 = h[h.size() - 2] / h[h.size() - 3];
        EXPECT_LT(q2, 0.9);
        EXPECT_NEAR(q1, q2, 0.05);
        EXPECT_LE(rel_diff(s.p, oracle_step.p), 1e-6);
        EXPECT_LE(rel_diff(s.u, oracle_step.u), 1e-6);
        EXPECT_LE(rel_diff(s.v, oracle_step.v), 1e-6);
    }
}

TEST(Terzaghi, PressureMatchesAnalyticSeries) {
    const int layers = 64;
    const auto p = unit_params();
    const Model m(column_mesh(layers), p, column_tags(1.0));
    const auto l = assembly::lame(1.0, 0.25);
    const double mod = l.lambda + l.two_mu, alpha = 1.0, s_store = 0.1;
    const double p0 = alpha / (mod * s_store + alpha * alpha);
    const double cv = 1.0 / (s_store + alpha * alpha / mod);
    SplittingSettings settings;
    settings.tolerance = 1e-10;
    settings.max_outer = 100;
    const TimeScheme scheme{{{0.02, 2.5e-4}, {0.1, 1e-3}, {0.5, 5e-3}}};
    std::vector<double> samples{0.01, 0.02, 0.05, 0.1, 0.5};
    std::vector<double> errors;
    const auto run = run_simulation(m, scheme, settings, [&](const SimulationState& s) {
        for (double t : samples) {
            if (std::abs(s.time - t) > 1e-12) continue;
            double num = 0.0, den = 0.0;
            for (std::size_t c = 0; c < m.mesh.num_triangles(); ++c) {
                const auto g = mesh::triangle_geometry(m.mesh, c);
                const double exact = oracle::terzaghi_pressure(1.0 - g.centroid.y, t, 1.0, p0, cv);
                num += g.area * std::pow(s.p[c] - exact, 2);
                den += g.area * exact * exact;
            }
            errors.push_back(std::sqrt(num / den));
        }
    });
    ASSERT_TRUE(run.ok) << run.error;
    ASSERT_EQ(errors.size(), samples.size());
    for (std::size_t i = 0; i < errors.size(); ++i) EXPECT_LT(errors[i], 0.02) << "t = " << samples[i];
}

namespace {

Model compressed_fracture_square(double load = 0.05) {
    Model m = fracture_square(unit_params(), load);
    m.tags["top"].flow.value = 1.0;
    m.tags["top"].flow.schedule = step_on();
    return Model(m.mesh, m.params, m.tags);
}

}  // namespace

TEST(Simulation, ContactFeasibilityAndComplementarityEveryStep) {
    const Model m = compressed_fracture_square();
    int checked = 0;
    const auto run = run_simulation(m, {{{0.5, 0.1}}}, {}, [&](const SimulationState& s) {
        const auto bu = linalg::multiply(m.contact.bi, s.u);
        double comp = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < bu.size(); ++i) {
            const double slack = m.contact.ci[i] - bu[i];
            EXPECT_GE(slack, -1e-10);
            EXPECT_GE(s.lambda[i], 0.0);
            comp += std::abs(s.lambda[i] * slack);
            scale += std::abs(s.lambda[i]) * m.contact.ci[i];
        }
        EXPECT_LE(comp, 1e-6 * std::max(scale, 1e-300));
        for (double a : s.fracture.aperture) EXPECT_GE(a, m.params.fracture.delta_min - 1e-12);
        ++checked;
    });
    ASSERT_TRUE(run.ok) << run.error;
    EXPECT_EQ(checked, 6);
    EXPECT_GT(run.steps.front().active_constraints, 0u);
}

TEST(Simulation, CumulativeCountersAndDeterminism) {
    const Model m = compressed_fracture_square();
    const auto a = run_simulation(m, {{{0.3, 0.1}}}, {});
    const auto b = run_simulation(m, {{{0.3, 0.1}}}, {});
    ASSERT_TRUE(a.ok && b.ok);
    long outer = 0, mults = 0;
    for (std::size_t k = 1; k < a.steps.size(); ++k) outer += a.steps[k].outer_iterations, mults += a.steps[k].hessian_mults;
    EXPECT_EQ(a.final_state.totals.outer_iterations, outer);
    EXPECT_EQ(a.final_state.totals.hessian_mults, mults);
    EXPECT_EQ(a.final_state.u, b.final_state.u);
    EXPECT_EQ(a.final_state.p, b.final_state.p);
    std::ostringstream csv_a, csv_b;
    write_step_csv(csv_a, a.steps);
    write_step_csv(csv_b, b.steps);
    EXPECT_EQ(csv_a.str(), csv_b.str());
    EXPECT_EQ(csv_a.str().substr(0, csv_a.str().find('\n')), kStepCsvHeader);
}

TEST(Simulation, WarmStartNeverCostsMore) {
    const Model m = compressed_fracture_square();
    SplittingSettings warm, cold;
    cold.warm_start = false;
    const auto a = run_simulation(m, {{{0.5, 0.1}}}, warm);
    const auto b = run_simulation(m, {{{0.5, 0.1}}}, cold);
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_LE(a.final_state.totals.hessian_mults, b.final_state.totals.hessian_mults);
    EXPECT_LE(rel_diff(a.final_state.u, b.final_state.u), 1e-6);
}

TEST(Simulation, FailureKeepsPartialTrajectory) {
    Model m = compressed_fracture_square();
    SplittingSettings s;
    s.mpgp.max_hessian_mults = 1;
    const auto run = run_simulation(m, {{{0.3, 0.1}}}, s);
    EXPECT_FALSE(run.ok);
    EXPECT_NE(run.error.find("iteration cap"), std::string::npos);
}

TEST(FixedStress, ConvergedStepSatisfiesUnsplitEquations) {
    auto p = unit_params();
    p.fracture.young = 0.5;
    Model m0 = fracture_square(p);
    m0.tags["top"].flow.value = 1.0;
    m0.tags["top"].flow.schedule = step_on();
    const Model m(m0.mesh, m0.params, m0.tags);
    SplittingSettings settings;
    settings.max_outer = 100;
    const auto s0 = initial_state(m, settings);
    const double t = 0.1;
    const auto s = fixed_stress_step(m, s0, t, settings);
    ASSERT_TRUE(s.report.converged);
    const auto rhs = m.rhs(t);
    const double hs = m.params.head_scale, dt = t - s0.time;

    const auto au = linalg::multiply(m.forms.a, s.u);
    const auto btp = linalg::multiply_transpose(m.forms.b, s.p);
    const auto bil = linalg::multiply_transpose(m.contact.bi, s.lambda);
    double num = 0.0, den = 0.0;
    for (auto k : m.dofs.free_displacement) {
        const double f = rhs.f1[k] + hs * btp[k];
        num += std::pow(au[k] - f + bil[k], 2);
        den += f * f;
    }
    EXPECT_LE(std::sqrt(num / den), 2.0 * settings.tolerance);

    Vector dp(s.p.size()), du(s.u.size());
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = s.p[i] - s0.p[i];
    for (std::size_t i = 0; i < du.size(); ++i) du[i] = s.u[i] - s0.u[i];
    const auto cdp = linalg::multiply(m.forms.c, dp), bdu = linalg::multiply(m.forms.b, du);
    const auto dv = linalg::multiply(m.forms.d, s.v), cp = linalg::multiply(m.forms.c, s.p);
    num = den = 0.0;
    for (std::size_t i = 0; i < dp.size(); ++i) {
        num += std::pow(cdp[i] + bdu[i] + dt * dv[i] - dt * rhs.f2[i], 2);
        den += std::pow(std::abs(cp[i]) + dt * std::abs(dv[i]), 2);
    }
    EXPECT_LE(std::sqrt(num / den), 2.0 * settings.tolerance);

    const auto e = assembly::assemble_darcy(m.mesh, m.dofs, m.params, m.fracture_state(s.u), t);
    const auto ev = linalg::multiply(e, s.v), dtp = linalg::multiply_transpose(m.forms.d, s.p);
    num = den = 0.0;
    for (auto k : m.dofs.free_flux) {
        num += std::pow(ev[k] - dtp[k] - rhs.f3[k], 2);
        den += ev[k] * ev[k] + dtp[k] * dtp[k];
    }
    EXPECT_LE(std::sqrt(num / den), 1e-10);
}
