#pragma once

#include "hmfrac/coupling/simulation.hpp"
#include "oracles.hpp"

namespace oracle {

using hmfrac::linalg::Vector;

/// One implicit Euler step of the unsplit linear Biot system on the free dofs,
/// solved densely:
///   A u − ϱg Bᵀp        = f1
///   B u + C p + Δt D v  = Δt f2 + C p_old + B u_old
///   −Dᵀp + E v          = f3
struct MonolithicStep {
    Vector u, p, v;
};

inline MonolithicStep monolithic_step(const hmfrac::coupling::Model& m, const hmfrac::coupling::SimulationState& old, double t) {
    using Eigen::Index;
    const auto& d = m.dofs;
    const auto rhs = m.rhs(t);
    const double dt = t - old.time;
    const auto nu = d.free_displacement.size(), np = d.num_pressure(), nv = d.free_flux.size();
    const auto a = dense(m.forms.a), b = dense(m.forms.b), c = dense(m.forms.c),
               dm = dense(m.forms.d);
    const auto e = dense(hmfrac::assembly::assemble_darcy(m.mesh, d, m.params, old.fracture, t));
    const auto n = static_cast<Index>(nu + np + nv);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd ufix = Eigen::VectorXd::Zero(static_cast<Index>(d.num_displacement()));
    for (auto g : d.fixed_displacement) ufix(static_cast<Index>(g)) = rhs.displacement_bc[g];
    Eigen::VectorXd vfix = Eigen::VectorXd::Zero(static_cast<Index>(d.num_flux));
    for (auto g : d.fixed_flux) vfix(static_cast<Index>(g)) = rhs.flux_bc[g];
    const auto uo = vec(old.u), po = vec(old.p);
    const double hs = m.params.head_scale;
    const auto iu = [&](std::size_t i) { return static_cast<Index>(i); };
    const auto ip = [&](std::size_t i) { return static_cast<Index>(nu + i); };
    const auto iv = [&](std::size_t i) { return static_cast<Index>(nu + np + i); };
    const Eigen::VectorXd a_ufix = a * ufix, b_ufix = b * ufix, d_vfix = dm * vfix, e_vfix = e * vfix;
    const Eigen::VectorXd cpo = c * po, buo = b * uo;
    for (std::size_t i = 0; i < nu; ++i) {
        const auto gi = static_cast<Index>(d.free_displacement[i]);
        for (std::size_t j = 0; j < nu; ++j) k(iu(i), iu(j)) = a(gi, static_cast<Index>(d.free_displacement[j]));
        for (std::size_t q = 0; q < np; ++q) k(iu(i), ip(q)) = -hs * b(static_cast<Index>(q), gi);
        r(iu(i)) = rhs.f1[d.free_displacement[i]] - a_ufix(gi);
    }
    for (std::size_t q = 0; q < np; ++q) {
        const auto qi = static_cast<Index>(q);
        for (std::size_t j = 0; j < nu; ++j) k(ip(q), iu(j)) = b(qi, static_cast<Index>(d.free_displacement[j]));
        for (std::size_t s = 0; s < np; ++s) k(ip(q), ip(s)) = c(qi, static_cast<Index>(s));
        for (std::size_t j = 0; j < nv; ++j) k(ip(q), iv(j)) = dt * dm(qi, static_cast<Index>(d.free_flux[j]));
        r(ip(q)) = dt * rhs.f2[q] + cpo(qi) + buo(qi) - b_ufix(qi) - dt * d_vfix(qi);
    }
    for (std::size_t j = 0; j < nv; ++j) {
        const auto gj = static_cast<Index>(d.free_flux[j]);
        for (std::size_t q = 0; q < np; ++q) k(iv(j), ip(q)) = -dm(static_cast<Index>(q), gj);
        for (std::size_t l = 0; l < nv; ++l) k(iv(j), iv(l)) = e(gj, static_cast<Index>(d.free_flux[l]));
        r(iv(j)) = rhs.f3[d.free_flux[j]] - e_vfix(gj);
    }
    const Eigen::VectorXd x = k.fullPivLu().solve(r);
    MonolithicStep out;
    out.u = stdvec(ufix);
    for (std::size_t i = 0; i < nu; ++i) out.u[d.free_displacement[i]] = x(iu(i));
    out.p.resize(np);
    for (std::size_t q = 0; q < np; ++q) out.p[q] = x(ip(q));
    out.v = stdvec(vfix);
    for (std::size_t j = 0; j < nv; ++j) out.v[d.free_flux[j]] = x(iv(j));
    return out;
}

}  // namespace oracle
