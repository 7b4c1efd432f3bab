#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hmfrac/assembly/parameters.hpp"
#include "hmfrac/linalg/sparse_matrix.hpp"
#include "hmfrac/mesh/boundary.hpp"

namespace hmfrac::assembly {

using linalg::SparseMatrix;
using linalg::Triplet;
using linalg::Vector;

/// Contribution coeff·v[dof] to a local outward flux.
struct FluxTerm {
    std::size_t dof;
    double coeff;
};

enum class FluxKind { matrix_face, boundary_face, exchange, fracture_node };

/// A piece of ∂Ω carrying boundary conditions: a matrix boundary face or a
/// fracture node on ∂Ω (which inherits the conditions of an adjacent face).
struct BoundaryPiece {
    enum class Kind { face, fracture_node };
    Kind kind = Kind::face;
    std::size_t id = 0;  // face id or node id
    std::string tag;
    Point where;         // face midpoint or node position
    double measure = 0;  // face length, or Σ δ over the fracture cells ending here
    Point facet_normal;  // outward unit normal of the (inherited) facet
    /// Flux dofs whose sum is the outward flux through this piece.
    std::vector<std::size_t> flux_dofs;
};

/// Numbering of displacement, pressure and flux unknowns.
///
/// Displacements: two per node (matrix nodes, their duplicates and fracture
/// nodes alike), dof 2·node + component. Pressures: one per triangle, then one
/// per fracture cell. Fluxes: one per matrix face pair or boundary face, two
/// exchange fluxes per fracture cell (flux from the fracture into the + and −
/// matrix cell), and tangential fluxes per fracture node: k−1 at a node with k
/// incident cells (none at a tip), k at a node with a Dirichlet pressure
/// condition, and k−1 plus one prescribed flux at a Neumann node.
struct DofMap {
    std::size_t num_nodes = 0;
    std::size_t num_triangles = 0;
    std::size_t num_fracture_cells = 0;
    std::size_t num_flux = 0;

    std::vector<FluxKind> flux_kind;
    /// Outward flux through local face k of each triangle.
    std::vector<std::array<FluxTerm, 3>> triangle_flux;
    /// Outward tangential flux at each end of each fracture cell.
    std::vector<std::array<std::vector<FluxTerm>, 2>> fracture_end_flux;
    /// Exchange flux dofs (into the + cell, into the − cell) of each fracture cell.
    std::vector<std::array<std::size_t, 2>> exchange_flux;

    std::vector<BoundaryPiece> boundary;
    /// Flux dofs prescribed by a Neumann condition, and the remaining ones.
    std::vector<bool> flux_fixed;
    std::vector<std::size_t> free_flux;
    std::vector<std::size_t> fixed_flux;
    /// Boundary piece prescribing each fixed flux dof.
    std::map<std::size_t, std::size_t> fixed_flux_piece;

    std::vector<bool> displacement_fixed;
    std::vector<std::size_t> free_displacement;
    std::vector<std::size_t> fixed_displacement;
    /// Boundary piece prescribing each fixed displacement dof.
    std::map<std::size_t, std::size_t> fixed_displacement_piece;

    std::size_t num_displacement() const noexcept { return 2 * num_nodes; }
    std::size_t num_pressure() const noexcept { return num_triangles + num_fracture_cells; }
    std::size_t fracture_pressure(std::size_t e) const noexcept { return num_triangles + e; }
    static constexpr std::size_t ux(std::size_t node) { return 2 * node; }
    static constexpr std::size_t uy(std::size_t node) { return 2 * node + 1; }
};

namespace detail {

inline int roller_component(Point n) {
    if (std::abs(n.y) < 1e-12 * std::abs(n.x)) return 0;
    if (std::abs(n.x) < 1e-12 * std::abs(n.y)) return 1;
    return -1;
}

}  // namespace detail

/// Builds the numbering. Throws Error for untagged boundary faces, unknown
/// tags and rollers on facets that are not axis-aligned.
inline DofMap build_dofs(const mesh::MixedDimMesh& m, const mesh::BoundaryTags& tags) {
    const auto& topo = m.topology();
    DofMap d;
    d.num_nodes = m.num_nodes();
    d.num_triangles = m.num_triangles();
    d.num_fracture_cells = m.num_fractures();
    d.triangle_flux.resize(d.num_triangles);
    d.fracture_end_flux.resize(d.num_fracture_cells);
    d.exchange_flux.resize(d.num_fracture_cells);

    auto new_flux = [&](FluxKind k) {
        d.flux_kind.push_back(k);
        return d.num_flux++;
    };
    auto lookup = [&](const std::string* tag, const std::string& where) -> const mesh::BoundaryTag& {
        if (!tag) throw Error("untagged boundary facet: " + where);
        const auto it = tags.find(*tag);
        if (it == tags.end()) throw Error("boundary tag '" + *tag + "' has no conditions (" + where + ")");
        return it->second;
    };

    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        const auto t = mesh::face_triangle(f);
        const auto k = static_cast<std::size_t>(mesh::face_local(f));
        if (topo.face_fracture[f] != mesh::Topology::kNone) continue;
        const long nb = topo.face_neighbor[f];
        if (nb == mesh::Topology::kNone) {
            const auto g = new_flux(FluxKind::boundary_face);
            d.triangle_flux[t][k] = {g, 1.0};
            lookup(m.tag_of(f), "face " + std::to_string(f));
            BoundaryPiece p;
            p.kind = BoundaryPiece::Kind::face;
            p.id = f;
            p.tag = *m.tag_of(f);
            p.where = m.face_midpoint(f);
            p.measure = m.face_length(f);
            p.facet_normal = m.face_outward_normal(f);
            p.flux_dofs = {g};
            d.boundary.push_back(std::move(p));
        } else if (static_cast<std::size_t>(nb) > f) {
            const auto g = new_flux(FluxKind::matrix_face);
            d.triangle_flux[t][k] = {g, 1.0};
            d.triangle_flux[mesh::face_triangle(static_cast<std::size_t>(nb))]
                           [static_cast<std::size_t>(mesh::face_local(static_cast<std::size_t>(nb)))] = {g, -1.0};
        }
    }

    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto& c = m.fractures()[e];
        for (int s = 0; s < 2; ++s) {
            const auto face = s == 0 ? c.plus_face : c.minus_face;
            const auto g = new_flux(FluxKind::exchange);
            d.exchange_flux[e][static_cast<std::size_t>(s)] = g;
            d.triangle_flux[mesh::face_triangle(face)][static_cast<std::size_t>(mesh::face_local(face))] = {g, -1.0};
        }
    }

    for (std::size_t v = 0; v < m.num_nodes(); ++v) {
        const auto& cells = topo.node_fracture_cells[v];
        if (cells.empty()) continue;
        auto end_of = [&](std::size_t e) { return m.fractures()[e].nodes[0] == v ? 0u : 1u; };
        auto slot = [&](std::size_t j) -> std::vector<FluxTerm>& { return d.fracture_end_flux[cells[j]][end_of(cells[j])]; };

        const auto facet = mesh::fracture_node_facet(m, v);
        bool dirichlet = false, neumann = false;
        std::size_t piece = 0;
        if (facet) {
            const auto& tag = lookup(m.tag_of(*facet), "face " + std::to_string(*facet));
            BoundaryPiece p;
            p.kind = BoundaryPiece::Kind::fracture_node;
            p.id = v;
            p.tag = *m.tag_of(*facet);
            p.where = m.nodes()[v];
            for (auto e : cells) p.measure += m.fractures()[e].delta;
            p.facet_normal = m.face_outward_normal(*facet);
            dirichlet = tag.flow.kind == mesh::FlowBcKind::dirichlet;
            neumann = !dirichlet;
            piece = d.boundary.size();
            d.boundary.push_back(std::move(p));
        }
        if (dirichlet) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                const auto g = new_flux(FluxKind::fracture_node);
                slot(j).push_back({g, 1.0});
                d.boundary[piece].flux_dofs.push_back(g);
            }
            continue;
        }
        if (neumann) {
            const auto g = new_flux(FluxKind::fracture_node);
            slot(0).push_back({g, 1.0});
            d.boundary[piece].flux_dofs.push_back(g);
        }
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const auto g = new_flux(FluxKind::fracture_node);
            slot(0).push_back({g, 1.0});
            slot(j).push_back({g, -1.0});
        }
    }

    // Neumann pieces fix their flux dof.
    d.flux_fixed.assign(d.num_flux, false);
    for (std::size_t i = 0; i < d.boundary.size(); ++i) {
        const auto& p = d.boundary[i];
        if (tags.at(p.tag).flow.kind != mesh::FlowBcKind::neumann) continue;
        for (auto g : p.flux_dofs) d.flux_fixed[g] = true, d.fixed_flux_piece[g] = i;
    }
    for (std::size_t g = 0; g < d.num_flux; ++g) (d.flux_fixed[g] ? d.fixed_flux : d.free_flux).push_back(g);

    // Displacement constraints; the first piece (in order) fixing a dof defines it.
    d.displacement_fixed.assign(d.num_displacement(), false);
    auto fix = [&](std::size_t node, int comp, std::size_t piece) {
        const auto dof = 2 * node + static_cast<std::size_t>(comp);
        if (!d.displacement_fixed[dof]) d.displacement_fixed[dof] = true, d.fixed_displacement_piece[dof] = piece;
    };
    for (std::size_t i = 0; i < d.boundary.size(); ++i) {
        const auto& p = d.boundary[i];
        const auto& bc = tags.at(p.tag).mech;
        if (bc.kind == mesh::MechBcKind::neumann) continue;
        std::vector<std::size_t> nodes;
        if (p.kind == BoundaryPiece::Kind::face) {
            const auto fn = m.face_nodes(p.id);
            nodes = {fn[0], fn[1]};
        } else {
            nodes = {p.id};
        }
        if (bc.kind == mesh::MechBcKind::dirichlet) {
            for (auto v : nodes) fix(v, 0, i), fix(v, 1, i);
        } else {
            const int comp = detail::roller_component(p.facet_normal);
            if (comp < 0) throw Error("roller condition on tag '" + p.tag + "' needs axis-aligned facets");
            for (auto v : nodes) fix(v, comp, i);
        }
    }
    for (std::size_t k = 0; k < d.num_displacement(); ++k)
        (d.displacement_fixed[k] ? d.fixed_displacement : d.free_displacement).push_back(k);
    return d;
}

}  // namespace hmfrac::assembly
