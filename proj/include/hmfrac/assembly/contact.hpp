#pragma once

#include <span>

#include "hmfrac/assembly/dofs.hpp"
#include "hmfrac/mesh/mesh.hpp"

namespace hmfrac::assembly {

/// Per fracture cell: element-average aperture, cubic-law conductivity and
/// whether the non-penetration constraint is engaged.
struct FractureState {
    Vector aperture;
    Vector conductivity;
    std::vector<bool> contact_active;
};

/// B_I u ≤ c_I, one row per fracture cell, over the full displacement vector.
struct ContactConstraints {
    SparseMatrix bi;
    Vector ci;
};

/// Row e encodes −¼ Σ± (u±_a + u±_b)·ν± ≤ δ_e − δ_min, i.e. the cell average
/// of a_f = δ + ⟨u_m·ν⟩ stays above δ_min.
inline ContactConstraints assemble_contact(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    std::vector<Triplet> t;
    ContactConstraints cc;
    cc.ci.resize(m.num_fractures());
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto& c = m.fractures()[e];
        if (c.delta < p.fracture.delta_min)
            throw Error("fracture cell " + std::to_string(e) + " has cross-section below the minimal cross-section");
        const auto g = mesh::fracture_geometry(m, e);
        for (int side = 0; side < 2; ++side) {
            const Point nu = side == 0 ? g.normal : -1.0 * g.normal;
            const auto& nodes = side == 0 ? g.plus_nodes : g.minus_nodes;
            for (auto v : nodes) {
                t.push_back({e, DofMap::ux(v), -0.25 * nu.x});
                t.push_back({e, DofMap::uy(v), -0.25 * nu.y});
            }
        }
        cc.ci[e] = c.delta - p.fracture.delta_min;
    }
    cc.bi = SparseMatrix::from_triplets(m.num_fractures(), dofs.num_displacement(), t);
    return cc;
}

/// Apertures from a full displacement vector, clamped below at δ_min.
inline FractureState update_fracture_state(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p,
                                           std::span<const double> u) {
    if (u.size() != dofs.num_displacement()) throw DimensionError("update_fracture_state: displacement size mismatch");
    FractureState s;
    const auto n = m.num_fractures();
    s.aperture.resize(n);
    s.conductivity.resize(n);
    s.contact_active.resize(n);
    const double dmin = p.fracture.delta_min;
    for (std::size_t e = 0; e < n; ++e) {
        const auto g = mesh::fracture_geometry(m, e);
        double opening = 0.0;
        for (int k = 0; k < 2; ++k) {
            const auto a = g.plus_nodes[static_cast<std::size_t>(k)], b = g.minus_nodes[static_cast<std::size_t>(k)];
            opening += g.normal.x * (u[DofMap::ux(a)] - u[DofMap::ux(b)]) + g.normal.y * (u[DofMap::uy(a)] - u[DofMap::uy(b)]);
        }
        const double raw = m.fractures()[e].delta + 0.25 * opening;
        s.aperture[e] = std::max(raw, dmin);
        s.contact_active[e] = raw - dmin <= 1e-10;
        s.conductivity[e] = p.fracture_conductivity(s.aperture[e]);
    }
    return s;
}

/// Rest state: apertures equal the cross-sections.
inline FractureState rest_fracture_state(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    return update_fracture_state(m, dofs, p, Vector(dofs.num_displacement(), 0.0));
}

}  // namespace hmfrac::assembly
