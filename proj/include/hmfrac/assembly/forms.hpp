#pragma once

#include <array>
#include <cmath>

#include "hmfrac/assembly/contact.hpp"

namespace hmfrac::assembly {

namespace detail {

/// Rows (ε_xx, ε_yy, ε_xy) of a strain that is linear in N local dofs.
template <std::size_t N>
struct StrainRows {
    std::array<std::array<double, N>, 3> r{};

    /// Adds the strain of sym(w e_c ⊗ b) to local dof j (component c).
    void add(std::size_t j, int c, double w, Point b) {
        const double ax = c == 0 ? w : 0.0, ay = c == 1 ? w : 0.0;
        r[0][j] += ax * b.x;
        r[1][j] += ay * b.y;
        r[2][j] += 0.5 * (ax * b.y + ay * b.x);
    }
};

/// K += w · Bᵀ C B with C the plane-strain Hooke tensor in (ε_xx, ε_yy, ε_xy).
template <std::size_t N>
void add_stiffness(std::array<std::array<double, N>, N>& k, const StrainRows<N>& b, Lame l, double w) {
    const double c[3][3] = {{l.lambda + l.two_mu, l.lambda, 0.0}, {l.lambda, l.lambda + l.two_mu, 0.0},
                            {0.0, 0.0, 2.0 * l.two_mu}};
    for (std::size_t i = 0; i < N; ++i) {
        double cb[3];
        for (int r = 0; r < 3; ++r)
            cb[r] = c[r][0] * b.r[0][i] + c[r][1] * b.r[1][i] + c[r][2] * b.r[2][i];
        for (std::size_t j = 0; j < N; ++j) k[i][j] += w * (cb[0] * b.r[0][j] + cb[1] * b.r[1][j] + cb[2] * b.r[2][j]);
    }
}

/// f −= w · σ:ε(z) for each local dof.
template <std::size_t N>
void add_prestress(std::array<double, N>& f, const StrainRows<N>& b, const Stress& s, double w) {
    for (std::size_t j = 0; j < N; ++j) f[j] -= w * (s.xx * b.r[0][j] + s.yy * b.r[1][j] + 2.0 * s.xy * b.r[2][j]);
}

inline StrainRows<6> triangle_strain(const mesh::TriangleGeometry& g) {
    StrainRows<6> b;
    for (std::size_t i = 0; i < 3; ++i) {
        b.add(2 * i, 0, 1.0, g.grad[i]);
        b.add(2 * i + 1, 1, 1.0, g.grad[i]);
    }
    return b;
}

/// Local dofs of a fracture cell: fracture nodes 0,1, then + face nodes, then
/// − face nodes (aligned with the fracture nodes), x and y each.
inline std::array<std::size_t, 12> fracture_local_dofs(const mesh::FractureCell& c, const mesh::FractureGeometry& g) {
    const std::array<std::size_t, 6> nodes{c.nodes[0], c.nodes[1], g.plus_nodes[0], g.plus_nodes[1],
                                           g.minus_nodes[0], g.minus_nodes[1]};
    std::array<std::size_t, 12> d{};
    for (std::size_t i = 0; i < 6; ++i) d[2 * i] = DofMap::ux(nodes[i]), d[2 * i + 1] = DofMap::uy(nodes[i]);
    return d;
}

/// ε̄± = sym(∂_τu_f ⊗ τ + (2/δ)(u_m± − u_f) ⊗ ν±) at parameter ξ ∈ [0, 1]; side 0 is +.
inline StrainRows<12> fracture_strain(const mesh::FractureGeometry& g, double delta, int side, double xi) {
    StrainRows<12> b;
    const Point nu = side == 0 ? g.normal : -1.0 * g.normal;
    const double inv_l = 1.0 / g.length, s = 2.0 / delta;
    const std::size_t m0 = side == 0 ? 4 : 8;
    for (int c = 0; c < 2; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        b.add(0 + cc, c, -inv_l, g.tangent);
        b.add(2 + cc, c, inv_l, g.tangent);
        b.add(0 + cc, c, -s * (1.0 - xi), nu);
        b.add(2 + cc, c, -s * xi, nu);
        b.add(m0 + cc, c, s * (1.0 - xi), nu);
        b.add(m0 + 2 + cc, c, s * xi, nu);
    }
    return b;
}

inline constexpr std::array<double, 2> kGauss2{0.5 - 0.28867513459481287, 0.5 + 0.28867513459481287};

template <std::size_t N>
void scatter(std::vector<Triplet>& t, const std::array<std::size_t, N>& dofs,
             const std::array<std::array<double, N>, N>& k) {
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (k[i][j] != 0.0) t.push_back({dofs[i], dofs[j], k[i][j]});
}

}  // namespace detail

struct ElasticitySystem {
    SparseMatrix a;
    /// −∫σ₀m:ε(z) − ∫⟨σ₀f:ε̄(z)⟩ over all displacement dofs.
    Vector prestress_load;
};

/// Form a: ∫ C_m ε(u):ε(z) over triangles plus δ ∫ ½Σ± C_f ε̄±(u):ε̄±(z) over
/// fracture cells (two-point Gauss, exact for the quadratic integrand).
inline ElasticitySystem assemble_elasticity(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    std::vector<Triplet> t;
    ElasticitySystem out;
    out.prestress_load.assign(dofs.num_displacement(), 0.0);
    for (std::size_t c = 0; c < m.num_triangles(); ++c) {
        const auto& tri = m.triangles()[c];
        const auto& mat = p.material(tri.region);
        const auto g = mesh::triangle_geometry(m, c);
        const auto b = detail::triangle_strain(g);
        std::array<std::array<double, 6>, 6> k{};
        detail::add_stiffness(k, b, lame(mat.young, mat.poisson), g.area);
        std::array<double, 6> f{};
        detail::add_prestress(f, b, p.initial_stress, g.area);
        std::array<std::size_t, 6> d{};
        for (std::size_t i = 0; i < 3; ++i) d[2 * i] = DofMap::ux(tri.nodes[i]), d[2 * i + 1] = DofMap::uy(tri.nodes[i]);
        detail::scatter(t, d, k);
        for (std::size_t i = 0; i < 6; ++i) out.prestress_load[d[i]] += f[i];
    }
    const auto lf = lame(p.fracture.young, p.fracture.poisson);
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto& c = m.fractures()[e];
        const auto g = mesh::fracture_geometry(m, e);
        std::array<std::array<double, 12>, 12> k{};
        std::array<double, 12> f{};
        for (int side = 0; side < 2; ++side)
            for (double xi : detail::kGauss2) {
                const auto b = detail::fracture_strain(g, c.delta, side, xi);
                const double w = c.delta * 0.5 * 0.5 * g.length;  // δ · side average · Gauss weight · L
                detail::add_stiffness(k, b, lf, w);
                detail::add_prestress(f, b, p.fracture.initial_stress, w);
            }
        const auto d = detail::fracture_local_dofs(c, g);
        detail::scatter(t, d, k);
        for (std::size_t i = 0; i < 12; ++i) out.prestress_load[d[i]] += f[i];
    }
    out.a = SparseMatrix::from_triplets(dofs.num_displacement(), dofs.num_displacement(), t);
    return out;
}

/// Form b: rows are pressures, columns displacements. Matrix rows ∫ α p div z;
/// fracture rows α_f [δ (z_f1 − z_f0)·τ + ∫ Σ± z_m±·ν±].
inline SparseMatrix assemble_coupling(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < m.num_triangles(); ++c) {
        const auto& tri = m.triangles()[c];
        const double alpha = p.material(tri.region).biot;
        if (alpha == 0.0) continue;
        const auto g = mesh::triangle_geometry(m, c);
        for (std::size_t i = 0; i < 3; ++i) {
            t.push_back({c, DofMap::ux(tri.nodes[i]), alpha * g.area * g.grad[i].x});
            t.push_back({c, DofMap::uy(tri.nodes[i]), alpha * g.area * g.grad[i].y});
        }
    }
    const double af = p.fracture.biot;
    if (af != 0.0)
        for (std::size_t e = 0; e < m.num_fractures(); ++e) {
            const auto& c = m.fractures()[e];
            const auto g = mesh::fracture_geometry(m, e);
            const auto row = dofs.fracture_pressure(e);
            for (int k = 0; k < 2; ++k) {
                const double sgn = k == 0 ? -1.0 : 1.0;
                const auto v = c.nodes[static_cast<std::size_t>(k)];
                t.push_back({row, DofMap::ux(v), af * c.delta * sgn * g.tangent.x});
                t.push_back({row, DofMap::uy(v), af * c.delta * sgn * g.tangent.y});
                for (int side = 0; side < 2; ++side) {
                    const Point nu = side == 0 ? g.normal : -1.0 * g.normal;
                    const auto w = (side == 0 ? g.plus_nodes : g.minus_nodes)[static_cast<std::size_t>(k)];
                    t.push_back({row, DofMap::ux(w), af * 0.5 * g.length * nu.x});
                    t.push_back({row, DofMap::uy(w), af * 0.5 * g.length * nu.y});
                }
            }
        }
    return SparseMatrix::from_triplets(dofs.num_pressure(), dofs.num_displacement(), t);
}

struct StorageMatrices {
    SparseMatrix c;
    SparseMatrix c_beta;
};

/// Forms c and c_β: diagonal P0 masses S|T|, δS_f|E| and β|T|, δβ_f|E|.
inline StorageMatrices assemble_storage(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    std::vector<Triplet> c, cb;
    for (std::size_t k = 0; k < m.num_triangles(); ++k) {
        const int region = m.triangles()[k].region;
        const double area = mesh::triangle_geometry(m, k).area;
        c.push_back({k, k, p.material(region).storativity * area});
        cb.push_back({k, k, matrix_beta(p, region) * area});
    }
    const double bf = fracture_beta(p);
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto row = dofs.fracture_pressure(e);
        const double vol = m.fractures()[e].delta * mesh::fracture_geometry(m, e).length;
        c.push_back({row, row, p.fracture.storativity * vol});
        cb.push_back({row, row, bf * vol});
    }
    const auto n = dofs.num_pressure();
    return {SparseMatrix::from_triplets(n, n, c), SparseMatrix::from_triplets(n, n, cb)};
}

/// Form d: rows are pressures, columns fluxes; entry = total outflow of the
/// cell carried by that flux dof.
inline SparseMatrix assemble_divergence(const mesh::MixedDimMesh& m, const DofMap& dofs) {
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < m.num_triangles(); ++c)
        for (const auto& ft : dofs.triangle_flux[c]) t.push_back({c, ft.dof, ft.coeff});
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto row = dofs.fracture_pressure(e);
        for (const auto& end : dofs.fracture_end_flux[e])
            for (const auto& ft : end) t.push_back({row, ft.dof, ft.coeff});
        for (auto x : dofs.exchange_flux[e]) t.push_back({row, x, 1.0});
    }
    return SparseMatrix::from_triplets(dofs.num_pressure(), dofs.num_flux, t);
}

/// RT0 mass ∫ φ_k·φ_l on a triangle, φ_k with unit outward flux on face k.
inline std::array<std::array<double, 3>, 3> rt0_mass(const mesh::MixedDimMesh& m, std::size_t tri) {
    const auto& n = m.triangles()[tri].nodes;
    const std::array<Point, 3> p{m.nodes()[n[0]], m.nodes()[n[1]], m.nodes()[n[2]]};
    const double area = mesh::triangle_geometry(m, tri).area;
    std::array<std::array<double, 3>, 3> out{};
    // φ_k = (x − P_k)/(2|T|); ∫ f·g for linear f, g = |T|/12 (Σ f_i·g_i + Σf_i · Σg_i).
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) {
            double s = 0.0;
            Point sa{}, sb{};
            for (std::size_t i = 0; i < 3; ++i) {
                const Point a = p[i] - p[k], b = p[i] - p[l];
                s += mesh::dot(a, b);
                sa = sa + a;
                sb = sb + b;
            }
            out[k][l] = area / 12.0 * (s + mesh::dot(sa, sb)) / (4.0 * area * area);
        }
    return out;
}

/// Form e: RT0 mass weighted by 1/k on triangles, tangential mass
/// 1/(k_f a_f)·[[L/3, −L/6], [−L/6, L/3]] on the outward end fluxes of each
/// fracture cell, and δ/(2 k_f L) on each exchange flux.
inline SparseMatrix assemble_darcy(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p,
                                   const FractureState& state, double time = 0.0) {
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < m.num_triangles(); ++c) {
        const auto& tri = m.triangles()[c];
        const double k = p.matrix_conductivity(tri.region, mesh::triangle_geometry(m, c).centroid, time);
        if (!(k > 0.0)) throw Error("non-positive matrix conductivity in triangle " + std::to_string(c));
        const auto mass = rt0_mass(m, c);
        const auto& f = dofs.triangle_flux[c];
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                t.push_back({f[i].dof, f[j].dof, f[i].coeff * f[j].coeff * mass[i][j] / k});
    }
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const double a = state.aperture.at(e), kf = state.conductivity.at(e);
        if (!(a > 0.0) || !(kf > 0.0)) throw Error("non-positive aperture in fracture cell " + std::to_string(e));
        const double len = mesh::fracture_geometry(m, e).length;
        const double local[2][2] = {{len / 3.0, -len / 6.0}, {-len / 6.0, len / 3.0}};
        const auto& ends = dofs.fracture_end_flux[e];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (const auto& fi : ends[static_cast<std::size_t>(i)])
                    for (const auto& fj : ends[static_cast<std::size_t>(j)])
                        t.push_back({fi.dof, fj.dof, fi.coeff * fj.coeff * local[i][j] / (kf * a)});
        const double ex = m.fractures()[e].delta / (2.0 * kf * len);
        for (auto x : dofs.exchange_flux[e]) t.push_back({x, x, ex});
    }
    return SparseMatrix::from_triplets(dofs.num_flux, dofs.num_flux, t);
}

/// Right-hand sides and boundary data at one time.
struct RhsVectors {
    Vector f1;  // displacement dofs
    Vector f2;  // pressure dofs
    Vector f3;  // flux dofs
    /// Prescribed values on fixed displacement dofs (zero elsewhere).
    Vector displacement_bc;
    /// Prescribed values on fixed (Neumann) flux dofs (zero elsewhere).
    Vector flux_bc;
};

/// f1: prestress, body loads and tractions; f2: sources; f3 = −∫ p_D w·n.
inline RhsVectors assemble_rhs(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p,
                               const mesh::BoundaryTags& tags, double time, const Vector* prestress_load = nullptr) {
    RhsVectors r;
    r.f1 = prestress_load ? *prestress_load : assemble_elasticity(m, dofs, p).prestress_load;
    r.f2.assign(dofs.num_pressure(), 0.0);
    r.f3.assign(dofs.num_flux, 0.0);
    r.displacement_bc.assign(dofs.num_displacement(), 0.0);
    r.flux_bc.assign(dofs.num_flux, 0.0);

    for (std::size_t c = 0; c < m.num_triangles(); ++c) {
        const double area = mesh::triangle_geometry(m, c).area;
        for (auto v : m.triangles()[c].nodes) {
            r.f1[DofMap::ux(v)] += p.body_force.x * area / 3.0;
            r.f1[DofMap::uy(v)] += p.body_force.y * area / 3.0;
        }
        r.f2[c] += p.matrix_source * area;
    }
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto& c = m.fractures()[e];
        const double vol = c.delta * mesh::fracture_geometry(m, e).length;
        for (auto v : c.nodes) {
            r.f1[DofMap::ux(v)] += p.fracture_force.x * vol / 2.0;
            r.f1[DofMap::uy(v)] += p.fracture_force.y * vol / 2.0;
        }
        r.f2[dofs.fracture_pressure(e)] += p.fracture_source * vol;
    }

    for (std::size_t i = 0; i < dofs.boundary.size(); ++i) {
        const auto& piece = dofs.boundary[i];
        const auto& tag = tags.at(piece.tag);
        const bool is_face = piece.kind == BoundaryPiece::Kind::face;

        const double flow_value = tag.flow.evaluate(piece.where, time);
        if (tag.flow.kind == mesh::FlowBcKind::dirichlet) {
            for (auto g : piece.flux_dofs) r.f3[g] -= flow_value;
        } else {
            // All prescribed outflow goes through the piece's single fixed dof.
            for (auto g : piece.flux_dofs) r.flux_bc[g] = flow_value * piece.measure;
        }

        const auto [value, scale] = tag.mech.evaluate(piece.where, time);
        if (tag.mech.kind == mesh::MechBcKind::neumann) {
            auto add_force = [&](std::size_t node, Point f) {
                r.f1[DofMap::ux(node)] += f.x;
                r.f1[DofMap::uy(node)] += f.y;
            };
            if (is_face) {
                const Point traction = value.initial_stress ? p.initial_stress.apply(piece.facet_normal) : value.vector;
                const auto [a, b] = m.face_nodes(piece.id);
                add_force(a, (0.5 * piece.measure * scale) * traction);
                add_force(b, (0.5 * piece.measure * scale) * traction);
            } else {
                for (auto e : m.topology().node_fracture_cells[piece.id]) {
                    const auto& c = m.fractures()[e];
                    const auto g = mesh::fracture_geometry(m, e);
                    const Point outward = c.nodes[1] == piece.id ? g.tangent : -1.0 * g.tangent;
                    const Point traction =
                        value.initial_stress ? p.fracture.initial_stress.apply(outward) : value.vector;
                    add_force(piece.id, (c.delta * scale) * traction);
                }
            }
        }
    }
    for (const auto& [dof, i] : dofs.fixed_displacement_piece) {
        const auto& piece = dofs.boundary[i];
        const auto [value, scale] = tags.at(piece.tag).mech.evaluate(piece.where, time);
        r.displacement_bc[dof] = scale * (dof % 2 == 0 ? value.vector.x : value.vector.y);
    }
    return r;
}

/// Every time-independent operator.
struct FormMatrices {
    SparseMatrix a, b, c, c_beta, d;
    Vector prestress_load;
};

inline FormMatrices assemble_forms(const mesh::MixedDimMesh& m, const DofMap& dofs, const HmParameters& p) {
    FormMatrices f;
    auto el = assemble_elasticity(m, dofs, p);
    f.a = std::move(el.a);
    f.prestress_load = std::move(el.prestress_load);
    f.b = assemble_coupling(m, dofs, p);
    auto st = assemble_storage(m, dofs, p);
    f.c = std::move(st.c);
    f.c_beta = std::move(st.c_beta);
    f.d = assemble_divergence(m, dofs);
    return f;
}

}  // namespace hmfrac::assembly
