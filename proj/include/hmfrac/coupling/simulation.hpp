#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "hmfrac/assembly/forms.hpp"
#include "hmfrac/coupling/settings.hpp"
#include "hmfrac/linalg/cg.hpp"
#include "hmfrac/linalg/factor.hpp"
#include "hmfrac/qp/dual.hpp"

namespace hmfrac::coupling {

using assembly::FractureState;
using assembly::RhsVectors;
using linalg::SparseMatrix;
using linalg::Vector;

/// Everything that stays fixed over a simulation: mesh, data, numbering,
/// time-independent operators and the dual contact problem built on the
/// factorization of the Dirichlet-reduced elasticity matrix.
struct Model {
    mesh::MixedDimMesh mesh;
    assembly::HmParameters params;
    mesh::BoundaryTags tags;
    assembly::DofMap dofs;
    assembly::FormMatrices forms;
    assembly::ContactConstraints contact;

    SparseMatrix a_free_fixed;    // A(free, fixed)
    SparseMatrix bi_fixed;        // B_I(:, fixed)
    qp::DualQP dual;              // over the free displacements
    double step_length = 1.0;     // ᾱ for F, estimated once

    Model(mesh::MixedDimMesh m, assembly::HmParameters p, mesh::BoundaryTags t,
          const qp::MpgpSettings& mpgp = {})
        : mesh(std::move(m)), params(std::move(p)), tags(std::move(t)) {
        params.check();
        dofs = assembly::build_dofs(mesh, tags);
        forms = assembly::assemble_forms(mesh, dofs, params);
        contact = assembly::assemble_contact(mesh, dofs, params);
        const auto& fr = dofs.free_displacement;
        const auto& fx = dofs.fixed_displacement;
        a_free_fixed = forms.a.select(fr, fx);
        std::vector<std::size_t> rows(contact.bi.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        bi_fixed = contact.bi.select(rows, fx);
        qp::InequalityQP q{forms.a.select(fr, fr), Vector(fr.size(), 0.0), contact.bi.select(rows, fr), contact.ci};
        try {
            dual = qp::dualize(q);
        } catch (const FactorizationError& e) {
            throw SolverError(std::string("elasticity matrix is singular after Dirichlet elimination (") + e.what() +
                              ")");
        }
        if (dual.dimension() > 0) {
            step_length = mpgp.step_length.value_or(
                qp::default_step_length(dual.box.hessian, mpgp.norm_estimate_iters, mpgp.norm_estimate_seed));
            dual.hessian_counter->store(0);
        }
    }

    RhsVectors rhs(double t) const {
        return assembly::assemble_rhs(mesh, dofs, params, tags, t, &forms.prestress_load);
    }

    FractureState fracture_state(std::span<const double> u) const {
        return assembly::update_fracture_state(mesh, dofs, params, u);
    }
};

/// Counters of one time step (or of the initial solve).
struct StepReport {
    long step = 0;
    double time = 0.0;
    double dt = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    long flow_iterations = 0;
    long hessian_mults = 0;
    long cg_steps = 0;
    long expansion_steps = 0;
    long proportioning_steps = 0;
    std::size_t active_constraints = 0;
    double increment_u = 0.0;
    double increment_p = 0.0;
    /// Splitting lag of the last outer iteration (see fixed_stress_step).
    double lag = 0.0;
    /// Relative pressure increment of every outer iteration.
    std::vector<double> increment_history;
};

struct CumulativeReport {
    long steps = 0;
    long outer_iterations = 0;
    long flow_iterations = 0;
    long hessian_mults = 0;

    void add(const StepReport& r) {
        ++steps;
        outer_iterations += r.outer_iterations;
        flow_iterations += r.flow_iterations;
        hessian_mults += r.hessian_mults;
    }
};

struct SimulationState {
    long step = 0;
    double time = 0.0;
    Vector u;       // all displacement dofs
    Vector p;       // matrix then fracture pressures
    Vector v;       // all flux dofs
    Vector lambda;  // contact multipliers
    FractureState fracture;
    StepReport report;
    CumulativeReport totals;
};

struct MechanicsResult {
    Vector u;
    Vector lambda;
    qp::MpgpResult qp;
};

/// Contact-constrained elasticity for a given pressure: A u = f1 + ϱg Bᵀp
/// subject to B_I u ≤ c_I, solved through the dual problem.
inline MechanicsResult solve_mechanics(const Model& m, const RhsVectors& rhs, std::span<const double> p,
                                       std::span<const double> lambda0, qp::MpgpSettings settings = {}) {
    const auto& d = m.dofs;
    if (p.size() != d.num_pressure()) throw DimensionError("solve_mechanics: pressure size mismatch");
    auto f = rhs.f1;
    const auto btp = linalg::multiply_transpose(m.forms.b, p);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += m.params.head_scale * btp[i];

    Vector ud(d.fixed_displacement.size());
    for (std::size_t k = 0; k < ud.size(); ++k) ud[k] = rhs.displacement_bc[d.fixed_displacement[k]];
    const auto afd_ud = linalg::multiply(m.a_free_fixed, ud);
    Vector bf(d.free_displacement.size());
    for (std::size_t k = 0; k < bf.size(); ++k) bf[k] = f[d.free_displacement[k]] - afd_ud[k];
    auto bounds = m.contact.ci;
    const auto bud = linalg::multiply(m.bi_fixed, ud);
    for (std::size_t i = 0; i < bounds.size(); ++i) bounds[i] -= bud[i];

    qp::DualQP q = m.dual;
    q.bounds = std::move(bounds);
    q = q.with_rhs(bf);

    MechanicsResult r;
    if (!settings.step_length) settings.step_length = m.step_length;
    Vector start(q.dimension(), 0.0);
    if (lambda0.size() == start.size()) start.assign(lambda0.begin(), lambda0.end());
    r.qp = qp::mpgp_solve(q.box, start, settings);
    if (!r.qp.converged()) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "contact QP hit the iteration cap: %ld Hessian multiplications, |g^P| = %.3e, dual size %zu",
                      r.qp.hessian_mults, r.qp.projected_gradient_norm, q.dimension());
        throw SolverError(buf);
    }
    r.lambda = r.qp.lambda;
    const auto uf = qp::recover_primal(q, r.lambda);
    r.u.assign(d.num_displacement(), 0.0);
    for (std::size_t k = 0; k < uf.size(); ++k) r.u[d.free_displacement[k]] = uf[k];
    for (std::size_t k = 0; k < ud.size(); ++k) r.u[d.fixed_displacement[k]] = ud[k];
    return r;
}

/// Data of one flow solve. Steady when dt is unset: storage and coupling
/// terms are dropped and the pressure rows read D v = f2.
struct FlowRequest {
    double time = 0.0;
    std::optional<double> dt;
    std::span<const double> u;
    std::span<const double> u_old;
    std::span<const double> p_old;
    std::span<const double> p_prev;
};

struct FlowResult {
    Vector p;
    Vector v;  // all flux dofs, prescribed ones included
    long iterations = 0;
};

/// Implicit Euler flow step of the fixed-stress scheme:
///   (C + C_β) p + Δt D v = Δt f2 + C p_old + C_β p_prev − B (u − u_old)
///   −Dᵀ p + E(u) v       = f3
/// with Neumann flux dofs eliminated.
inline FlowResult solve_flow(const Model& m, const RhsVectors& rhs, const FractureState& fs, const FlowRequest& req,
                             const SplittingSettings& settings = {}) {
    const auto& d = m.dofs;
    const auto np = d.num_pressure();
    const auto nf = d.free_flux.size();
    const bool steady = !req.dt.has_value();
    const double dt = steady ? 1.0 : *req.dt;
    if (!(dt > 0.0)) throw Error("solve_flow: time step must be positive");

    constexpr auto npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> pos(d.num_flux, npos);
    for (std::size_t k = 0; k < nf; ++k) pos[d.free_flux[k]] = k;
    Vector vn(d.num_flux, 0.0);
    for (auto g : d.fixed_flux) vn[g] = rhs.flux_bc[g];

    const auto e = assembly::assemble_darcy(m.mesh, d, m.params, fs, req.time);

    Vector rp(np, 0.0), rv(nf, 0.0);
    for (std::size_t i = 0; i < np; ++i) rp[i] = dt * rhs.f2[i];
    for (std::size_t k = 0; k < nf; ++k) rv[k] = rhs.f3[d.free_flux[k]];
    const auto dvn = linalg::multiply(m.forms.d, vn);
    const auto evn = linalg::multiply(e, vn);
    for (std::size_t i = 0; i < np; ++i) rp[i] -= dt * dvn[i];
    for (std::size_t k = 0; k < nf; ++k) rv[k] -= evn[d.free_flux[k]];

    std::vector<linalg::Triplet> mt;
    if (!steady) {
        const auto cp = linalg::multiply(m.forms.c, req.p_old);
        const auto cbp = linalg::multiply(m.forms.c_beta, req.p_prev);
        Vector du(req.u.size());
        for (std::size_t i = 0; i < du.size(); ++i) du[i] = req.u[i] - req.u_old[i];
        const auto bdu = linalg::multiply(m.forms.b, du);
        for (std::size_t i = 0; i < np; ++i) rp[i] += cp[i] + cbp[i] - bdu[i];
        m.forms.c.for_each([&](std::size_t i, std::size_t j, double v) { mt.push_back({i, j, v}); });
        m.forms.c_beta.for_each([&](std::size_t i, std::size_t j, double v) { mt.push_back({i, j, v}); });
    }

    std::vector<linalg::Triplet> dft, eft;
    m.forms.d.for_each([&](std::size_t i, std::size_t g, double v) {
        if (pos[g] != npos) dft.push_back({i, pos[g], v});
    });
    e.for_each([&](std::size_t g, std::size_t h, double v) {
        if (pos[g] != npos && pos[h] != npos) eft.push_back({pos[g], pos[h], v});
    });

    FlowResult res;
    Vector vf;
    if (settings.flow_solver == FlowSolver::direct) {
        std::vector<linalg::Triplet> t = mt;
        for (const auto& x : dft) {
            t.push_back({x.row, np + x.col, dt * x.value});
            t.push_back({np + x.col, x.row, -x.value});
        }
        for (const auto& x : eft) t.push_back({np + x.row, np + x.col, x.value});
        const auto sys = SparseMatrix::from_triplets(np + nf, np + nf, std::move(t));
        Vector rhs_all(rp);
        rhs_all.insert(rhs_all.end(), rv.begin(), rv.end());
        Vector sol;
        try {
            sol = linalg::factor_general(sys).solve(rhs_all);
        } catch (const FactorizationError& ex) {
            throw SolverError(std::string("flow system is singular (check pressure boundary conditions): ") + ex.what());
        }
        res.p.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(np));
        vf.assign(sol.begin() + static_cast<std::ptrdiff_t>(np), sol.end());
        res.iterations = 1;
    } else {
        const auto mm = SparseMatrix::from_triplets(np, np, std::move(mt));
        const auto df = SparseMatrix::from_triplets(np, nf, std::move(dft));
        const auto ef = linalg::factor_spd(SparseMatrix::from_triplets(nf, nf, std::move(eft)));
        const linalg::LinearOperator schur(np, [&](std::span<const double> x, std::span<double> y) {
            const auto w = ef.solve(linalg::multiply_transpose(df, x));
            const auto dw = linalg::multiply(df, w);
            mm.apply(x, y);
            for (std::size_t i = 0; i < np; ++i) y[i] += dt * dw[i];
        });
        const auto erv = linalg::multiply(df, ef.solve(rv));
        Vector b(np);
        for (std::size_t i = 0; i < np; ++i) b[i] = rp[i] - dt * erv[i];
        const auto cg = linalg::cg_solve(schur, b, settings.flow_cg_tolerance, settings.flow_cg_max_iter);
        if (!cg.converged) throw SolverError("flow Schur complement CG did not converge");
        res.p = cg.x;
        res.iterations = cg.iterations;
        auto r = rv;
        const auto dtp = linalg::multiply_transpose(df, res.p);
        for (std::size_t k = 0; k < nf; ++k) r[k] += dtp[k];
        vf = ef.solve(r);
    }
    res.v = vn;
    for (std::size_t k = 0; k < nf; ++k) res.v[d.free_flux[k]] = vf[k];
    return res;
}

namespace detail {

inline double relative_increment(std::span<const double> now, std::span<const double> before) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i) {
        num += (now[i] - before[i]) * (now[i] - before[i]);
        den += now[i] * now[i];
    }
    if (num == 0.0) return 0.0;
    return den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
}

inline std::size_t count_active(const FractureState& s) {
    return static_cast<std::size_t>(std::count(s.contact_active.begin(), s.contact_active.end(), true));
}

inline void add_qp(StepReport& r, const qp::MpgpResult& q) {
    r.hessian_mults += q.hessian_mults;
    r.cg_steps += q.cg_steps;
    r.expansion_steps += q.expansion_steps;
    r.proportioning_steps += q.proportioning_steps;
}

}  // namespace detail

/// State at t = 0: a steady flow solve with the rest apertures, then the
/// contact problem loaded by that pressure. Steady flow and mechanics are
/// repeated while the apertures (and so the fracture conductivities) still
/// move the pressure, up to max_outer passes.
inline SimulationState initial_state(const Model& m, const SplittingSettings& settings = {}) {
    settings.check();
    const auto rhs = m.rhs(0.0);
    SimulationState s;
    s.fracture = assembly::rest_fracture_state(m.mesh, m.dofs, m.params);
    s.u.assign(m.dofs.num_displacement(), 0.0);
    s.report.step = 0;
    for (int i = 1; i <= settings.max_outer; ++i) {
        FlowRequest req;
        auto flow = solve_flow(m, rhs, s.fracture, req, settings);
        auto mech = solve_mechanics(m, rhs, flow.p, s.lambda, settings.mpgp);
        s.report.increment_p = i == 1 ? 0.0 : detail::relative_increment(flow.p, s.p);
        s.report.increment_u = detail::relative_increment(mech.u, s.u);
        s.p = std::move(flow.p);
        s.v = std::move(flow.v);
        s.u = std::move(mech.u);
        s.lambda = std::move(mech.lambda);
        s.fracture = m.fracture_state(s.u);
        s.report.outer_iterations = i;
        s.report.flow_iterations += flow.iterations;
        detail::add_qp(s.report, mech.qp);
        if (m.mesh.num_fractures() == 0 || (i > 1 && s.report.increment_p <= settings.tolerance)) {
            s.report.converged = true;
            break;
        }
    }
    s.report.active_constraints = detail::count_active(s.fracture);
    return s;
}

/// Relative splitting lag of an outer iterate. The split equations differ from
/// the coupled ones only through p_{i−1} in place of p_i: the mechanics misses
/// ϱg Bᵀ(p_i − p_{i−1}) on the free dofs and the flow carries an extra
/// C_β(p_i − p_{i−1}). Each is measured against the size of its equation.
inline double splitting_lag(const Model& m, const RhsVectors& rhs, std::span<const double> p_prev,
                            std::span<const double> p, std::span<const double> v, double dt) {
    const auto& d = m.dofs;
    Vector dp(p.size());
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = p[i] - p_prev[i];
    const double hs = m.params.head_scale;
    const auto btdp = linalg::multiply_transpose(m.forms.b, dp);
    const auto btp = linalg::multiply_transpose(m.forms.b, p_prev);
    double num_m = 0.0, den_m = 0.0;
    for (auto k : d.free_displacement) {
        num_m += hs * hs * btdp[k] * btdp[k];
        const double f = rhs.f1[k] + hs * btp[k];
        den_m += f * f;
    }
    const auto cbdp = linalg::multiply(m.forms.c_beta, dp);
    const auto cp = linalg::multiply(m.forms.c, p);
    const auto cbp = linalg::multiply(m.forms.c_beta, p);
    const auto dv = linalg::multiply(m.forms.d, v);
    double num_f = 0.0, den_f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        num_f += cbdp[i] * cbdp[i];
        den_f += std::pow(std::abs(cp[i] + cbp[i]) + dt * std::abs(dv[i]), 2);
    }
    auto rel = [](double num, double den) { return num == 0.0 ? 0.0 : (den > 0.0 ? std::sqrt(num / den) : 1.0); };
    return std::max(rel(num_m, den_m), rel(num_f, den_f));
}

/// One implicit Euler step from `s` to time t with fixed-stress splitting:
/// mechanics with the previous pressure iterate, then flow with the new
/// displacement. Stops once the splitting lag is below the tolerance, or at
/// max_outer (recorded, not fatal).
inline SimulationState fixed_stress_step(const Model& m, const SimulationState& s, double t,
                                         const SplittingSettings& settings = {}) {
    settings.check();
    const double dt = t - s.time;
    if (!(dt > 0.0)) throw Error("fixed_stress_step: time must advance");
    const auto rhs = m.rhs(t);

    SimulationState next;
    next.step = s.step + 1;
    next.time = t;
    next.totals = s.totals;
    auto& r = next.report;
    r.step = next.step;
    r.time = t;
    r.dt = dt;

    Vector p_prev = s.p, u_prev = s.u, lambda = s.lambda;
    for (int i = 1; i <= settings.max_outer; ++i) {
        const Vector start = settings.warm_start ? lambda : Vector{};
        auto mech = solve_mechanics(m, rhs, p_prev, start, settings.mpgp);
        detail::add_qp(r, mech.qp);
        auto fs = m.fracture_state(mech.u);
        FlowRequest req{t, dt, mech.u, s.u, s.p, p_prev};
        auto flow = solve_flow(m, rhs, fs, req, settings);
        r.flow_iterations += flow.iterations;
        r.outer_iterations = i;
        r.increment_u = detail::relative_increment(mech.u, u_prev);
        r.increment_p = detail::relative_increment(flow.p, p_prev);
        r.increment_history.push_back(r.increment_p);
        r.lag = splitting_lag(m, rhs, p_prev, flow.p, flow.v, dt);
        p_prev = flow.p;
        u_prev = mech.u;
        lambda = mech.lambda;
        next.p = std::move(flow.p);
        next.v = std::move(flow.v);
        next.u = std::move(mech.u);
        next.lambda = lambda;
        next.fracture = std::move(fs);
        if (r.lag <= settings.tolerance) {
            r.converged = true;
            break;
        }
    }
    r.active_constraints = detail::count_active(next.fracture);
    next.totals.add(r);
    return next;
}

struct Trajectory {
    std::vector<StepReport> steps;  // initial solve first
    SimulationState final_state;
    bool ok = true;
    std::string error;
};

using Observer = std::function<void(const SimulationState&)>;

/// Advances through the scheme. The observer sees the initial state and every
/// step. A failing step ends the run; the trajectory up to it is kept.
inline Trajectory run_simulation(const Model& m, const TimeScheme& scheme, const SplittingSettings& settings,
                                 const Observer& observer = {}) {
    Trajectory out;
    SimulationState s;
    try {
        const auto times = scheme.times();
        s = initial_state(m, settings);
        out.steps.push_back(s.report);
        if (observer) observer(s);
        for (double t : times) {
            s = fixed_stress_step(m, s, t, settings);
            out.steps.push_back(s.report);
            if (observer) observer(s);
        }
    } catch (const Error& e) {
        out.ok = false;
        out.error = e.what();
    }
    out.final_state = std::move(s);
    return out;
}

inline constexpr const char* kStepCsvHeader =
    "step,time,dt,outer_iterations,converged,flow_iterations,hessian_mults,cg_steps,expansion_steps,"
    "proportioning_steps,active_constraints,increment_u,increment_p";

inline void write_step_row(std::ostream& os, const StepReport& r) {
    char buf[400];
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%d,%d,%ld,%ld,%ld,%ld,%ld,%zu,%.6e,%.6e\n", r.step, r.time, r.dt,
                  r.outer_iterations, r.converged ? 1 : 0, r.flow_iterations, r.hessian_mults, r.cg_steps,
                  r.expansion_steps, r.proportioning_steps, r.active_constraints, r.increment_u, r.increment_p);
    os << buf;
}

inline void write_step_csv(std::ostream& os, const std::vector<StepReport>& steps) {
    os << kStepCsvHeader << '\n';
    for (const auto& r : steps) write_step_row(os, r);
}

}  // namespace hmfrac::coupling
