#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmfrac/error.hpp"

namespace hmfrac::mesh {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Counterclockwise-ordered triangle. Face k is the edge opposite vertex k.
struct Triangle {
    std::array<std::size_t, 3> nodes{};
    int region = 0;

    friend bool operator==(const Triangle&, const Triangle&) = default;
};

/// Face id of local face k of triangle t.
inline constexpr std::size_t face_id(std::size_t t, int k) { return 3 * t + static_cast<std::size_t>(k); }
inline constexpr std::size_t face_triangle(std::size_t f) { return f / 3; }
inline constexpr int face_local(std::size_t f) { return static_cast<int>(f % 3); }

/// Fracture segment. nodes index the node array (fracture nodes are never
/// referenced by triangles). The + face lies on the side ν⁺ points to.
struct FractureCell {
    std::array<std::size_t, 2> nodes{};
    double delta = 0.0;
    Point normal;
    std::size_t plus_face = 0;
    std::size_t minus_face = 0;

    friend bool operator==(const FractureCell&, const FractureCell&) = default;
};

/// Connectivity derived from the raw arrays.
struct Topology {
    static constexpr long kNone = -1;

    /// Matching face of the neighbouring triangle, or kNone.
    std::vector<long> face_neighbor;
    /// Fracture cell whose ± face this is, or kNone; face_side is +1 / −1.
    std::vector<long> face_fracture;
    std::vector<int> face_side;
    /// Faces with no neighbour and no fracture: the outer and hole boundary.
    std::vector<std::size_t> boundary_faces;
    /// Fracture cells incident to each node (empty for matrix nodes).
    std::vector<std::vector<std::size_t>> node_fracture_cells;
    /// Whether each node is referenced by some triangle.
    std::vector<bool> is_matrix_node;
    /// Whether each node lies on some boundary face (matrix nodes only).
    std::vector<bool> on_boundary;
    /// Fracture nodes with one incident cell and not on ∂Ω.
    std::vector<std::size_t> tip_nodes;
    /// Fracture nodes with three or more incident cells.
    std::vector<std::size_t> intersection_nodes;
    /// Fracture nodes located on ∂Ω.
    std::vector<std::size_t> boundary_fracture_nodes;
};

class MixedDimMesh {
public:
    MixedDimMesh() = default;

    /// Takes the raw arrays and derives topology. No invariant is enforced
    /// here; call validate().
    MixedDimMesh(std::vector<Point> nodes, std::vector<Triangle> triangles, std::vector<FractureCell> fractures,
                 std::map<std::size_t, std::string> boundary_tags)
        : nodes_(std::move(nodes)),
          triangles_(std::move(triangles)),
          fractures_(std::move(fractures)),
          boundary_tags_(std::move(boundary_tags)) {
        build_topology();
    }

    const std::vector<Point>& nodes() const noexcept { return nodes_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const std::vector<FractureCell>& fractures() const noexcept { return fractures_; }
    /// Boundary face id → tag name.
    const std::map<std::size_t, std::string>& boundary_tags() const noexcept { return boundary_tags_; }
    const Topology& topology() const noexcept { return topo_; }

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }
    std::size_t num_fractures() const noexcept { return fractures_.size(); }
    std::size_t num_faces() const noexcept { return 3 * triangles_.size(); }

    /// Node ids of face f, in counterclockwise order of its triangle.
    std::array<std::size_t, 2> face_nodes(std::size_t f) const {
        const auto& t = triangles_.at(face_triangle(f)).nodes;
        const int k = face_local(f);
        return {t[static_cast<std::size_t>((k + 1) % 3)], t[static_cast<std::size_t>((k + 2) % 3)]};
    }

    double face_length(std::size_t f) const {
        const auto [a, b] = face_nodes(f);
        return norm(nodes_[b] - nodes_[a]);
    }

    Point face_midpoint(std::size_t f) const {
        const auto [a, b] = face_nodes(f);
        return 0.5 * (nodes_[a] + nodes_[b]);
    }

    /// Outward unit normal of face f with respect to its triangle.
    Point face_outward_normal(std::size_t f) const {
        const auto [a, b] = face_nodes(f);
        const Point e = nodes_[b] - nodes_[a];
        const double l = norm(e);
        return {e.y / l, -e.x / l};
    }

    const std::string* tag_of(std::size_t face) const {
        const auto it = boundary_tags_.find(face);
        return it == boundary_tags_.end() ? nullptr : &it->second;
    }

    friend bool operator==(const MixedDimMesh& a, const MixedDimMesh& b) {
        return a.nodes_ == b.nodes_ && a.triangles_ == b.triangles_ && a.fractures_ == b.fractures_ &&
               a.boundary_tags_ == b.boundary_tags_;
    }

private:
    void build_topology();

    std::vector<Point> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<FractureCell> fractures_;
    std::map<std::size_t, std::string> boundary_tags_;
    Topology topo_;
};

inline void MixedDimMesh::build_topology() {
    const auto nn = nodes_.size();
    const auto nf = num_faces();
    topo_ = Topology{};
    topo_.face_neighbor.assign(nf, Topology::kNone);
    topo_.face_fracture.assign(nf, Topology::kNone);
    topo_.face_side.assign(nf, 0);
    topo_.node_fracture_cells.assign(nn, {});
    topo_.is_matrix_node.assign(nn, false);
    topo_.on_boundary.assign(nn, false);

    auto valid_node = [&](std::size_t v) { return v < nn; };
    for (const auto& t : triangles_)
        for (auto v : t.nodes)
            if (valid_node(v)) topo_.is_matrix_node[v] = true;

    for (std::size_t e = 0; e < fractures_.size(); ++e) {
        const auto& c = fractures_[e];
        if (c.plus_face < nf) topo_.face_fracture[c.plus_face] = static_cast<long>(e), topo_.face_side[c.plus_face] = 1;
        if (c.minus_face < nf)
            topo_.face_fracture[c.minus_face] = static_cast<long>(e), topo_.face_side[c.minus_face] = -1;
        for (auto v : c.nodes)
            if (valid_node(v)) topo_.node_fracture_cells[v].push_back(e);
    }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> open;
    for (std::size_t f = 0; f < nf; ++f) {
        if (topo_.face_fracture[f] != Topology::kNone) continue;
        auto [a, b] = face_nodes(f);
        if (!valid_node(a) || !valid_node(b)) continue;
        const auto key = std::minmax(a, b);
        auto it = open.find(key);
        if (it == open.end()) {
            open.emplace(key, f);
        } else {
            topo_.face_neighbor[f] = static_cast<long>(it->second);
            topo_.face_neighbor[it->second] = static_cast<long>(f);
            open.erase(it);
        }
    }
    for (const auto& [key, f] : open) {
        topo_.boundary_faces.push_back(f);
        topo_.on_boundary[key.first] = true;
        topo_.on_boundary[key.second] = true;
    }
    std::sort(topo_.boundary_faces.begin(), topo_.boundary_faces.end());

    // A fracture node is on ∂Ω when a boundary matrix node shares its position.
    std::map<Point, bool> boundary_points;
    for (std::size_t v = 0; v < nn; ++v)
        if (topo_.on_boundary[v]) boundary_points[nodes_[v]] = true;
    for (std::size_t v = 0; v < nn; ++v) {
        const auto deg = topo_.node_fracture_cells[v].size();
        if (deg == 0) continue;
        const bool on_b = boundary_points.count(nodes_[v]) > 0;
        if (on_b)
            topo_.boundary_fracture_nodes.push_back(v);
        else if (deg == 1)
            topo_.tip_nodes.push_back(v);
        if (deg >= 3) topo_.intersection_nodes.push_back(v);
    }
}

struct TriangleGeometry {
    double area;
    Point centroid;
    /// Gradients of the three P1 shape functions.
    std::array<Point, 3> grad;
};

inline TriangleGeometry triangle_geometry(const MixedDimMesh& m, std::size_t t) {
    if (t >= m.num_triangles()) throw MeshError("unknown triangle id " + std::to_string(t));
    const auto& n = m.triangles()[t].nodes;
    const Point p0 = m.nodes()[n[0]], p1 = m.nodes()[n[1]], p2 = m.nodes()[n[2]];
    const double twice = cross(p1 - p0, p2 - p0);
    TriangleGeometry g;
    g.area = 0.5 * twice;
    g.centroid = (1.0 / 3.0) * (p0 + p1 + p2);
    const std::array<Point, 3> p{p0, p1, p2};
    for (int k = 0; k < 3; ++k) {
        const Point e = p[static_cast<std::size_t>((k + 2) % 3)] - p[static_cast<std::size_t>((k + 1) % 3)];
        g.grad[static_cast<std::size_t>(k)] = {-e.y / twice, e.x / twice};
    }
    return g;
}

struct FractureGeometry {
    double length;
    Point midpoint;
    Point normal;   // ν⁺
    Point tangent;  // from nodes[0] to nodes[1]
    /// Matrix node on each side coinciding with fracture node 0 and 1.
    std::array<std::size_t, 2> plus_nodes;
    std::array<std::size_t, 2> minus_nodes;
};

namespace detail {
inline std::array<std::size_t, 2> align_face(const MixedDimMesh& m, std::size_t face, const FractureCell& c) {
    const auto fn = m.face_nodes(face);
    const Point a = m.nodes()[c.nodes[0]];
    if (m.nodes()[fn[0]] == a) return {fn[0], fn[1]};
    if (m.nodes()[fn[1]] == a) return {fn[1], fn[0]};
    throw MeshError("fracture face " + std::to_string(face) + " does not coincide with its fracture cell");
}
}  // namespace detail

inline FractureGeometry fracture_geometry(const MixedDimMesh& m, std::size_t e) {
    if (e >= m.num_fractures()) throw MeshError("unknown fracture cell id " + std::to_string(e));
    const auto& c = m.fractures()[e];
    const Point a = m.nodes()[c.nodes[0]], b = m.nodes()[c.nodes[1]];
    FractureGeometry g;
    g.length = norm(b - a);
    g.midpoint = 0.5 * (a + b);
    g.tangent = (1.0 / g.length) * (b - a);
    g.normal = c.normal;
    g.plus_nodes = detail::align_face(m, c.plus_face, c);
    g.minus_nodes = detail::align_face(m, c.minus_face, c);
    return g;
}

/// Every invariant violation found, each naming the invariant and the entity.
inline std::vector<std::string> validate(const MixedDimMesh& m) {
    std::vector<std::string> out;
    auto report = [&](std::string s) { out.push_back(std::move(s)); };
    const auto nn = m.num_nodes();
    const auto nf = m.num_faces();
    const auto& topo = m.topology();

    bool indices_ok = true;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles()[t];
        if (std::any_of(tri.nodes.begin(), tri.nodes.end(), [&](auto v) { return v >= nn; })) {
            report("node index: triangle " + std::to_string(t) + " references a missing node");
            indices_ok = false;
            continue;
        }
        if (!(triangle_geometry(m, t).area > 0.0))
            report("orientation: triangle " + std::to_string(t) + " is degenerate or clockwise");
    }
    for (std::size_t e = 0; e < m.num_fractures(); ++e) {
        const auto& c = m.fractures()[e];
        const auto id = std::to_string(e);
        if (c.nodes[0] >= nn || c.nodes[1] >= nn || c.plus_face >= nf || c.minus_face >= nf) {
            report("node index: fracture cell " + id + " references a missing node or face");
            indices_ok = false;
            continue;
        }
        if (!(c.delta > 0.0)) report("positive cross-section: fracture cell " + id + " has delta <= 0");
        if (!(std::abs(norm(c.normal) - 1.0) <= 1e-12))
            report("unit normal: fracture cell " + id + " has a non-unit normal");
        if (topo.is_matrix_node[c.nodes[0]] || topo.is_matrix_node[c.nodes[1]])
            report("fracture nodes: fracture cell " + id + " uses a node referenced by a triangle");
        const Point a = m.nodes()[c.nodes[0]], b = m.nodes()[c.nodes[1]];
        const double len = norm(b - a);
        if (!(len > 0.0)) {
            report("degenerate fracture: fracture cell " + id + " has zero length");
            continue;
        }
        const Point expected{-(b.y - a.y) / len, (b.x - a.x) / len};
        if (norm(c.normal - expected) > 1e-9)
            report("normal orientation: fracture cell " + id + " normal is not the counterclockwise rotation of its tangent");
        if (c.plus_face == c.minus_face) {
            report("compatibility: fracture cell " + id + " has identical + and - faces");
            continue;
        }
        bool faces_ok = true;
        for (auto [face, side] : {std::pair{c.plus_face, 1}, std::pair{c.minus_face, -1}}) {
            const auto fn = m.face_nodes(face);
            const Point p = m.nodes()[fn[0]], q = m.nodes()[fn[1]];
            if (!((p == a && q == b) || (p == b && q == a))) {
                report("compatibility: fracture cell " + id + " does not coincide with its " +
                       (side > 0 ? "+" : "-") + " face " + std::to_string(face));
                faces_ok = false;
                continue;
            }
            const auto& tri = m.triangles()[face_triangle(face)].nodes;
            const Point opposite = m.nodes()[tri[static_cast<std::size_t>(face_local(face))]];
            if (side * dot(opposite - a, c.normal) <= 0.0)
                report("compatibility: fracture cell " + id + " " + (side > 0 ? "+" : "-") +
                       " face lies on the wrong side of the normal");
        }
        if (faces_ok) {
            const auto pf = m.face_nodes(c.plus_face), mf = m.face_nodes(c.minus_face);
            if (std::minmax(pf[0], pf[1]) == std::minmax(mf[0], mf[1]))
                report("node duplication: fracture cell " + id + " has no duplicated matrix node (both ends merged)");
        }
    }
    if (!indices_ok) return out;

    for (std::size_t v = 0; v < nn; ++v)
        if (!topo.is_matrix_node[v] && topo.node_fracture_cells[v].empty())
            report("unused node: node " + std::to_string(v) + " is referenced by no cell");

    // Each face is used by at most one fracture side.
    std::vector<int> face_uses(nf, 0);
    for (const auto& c : m.fractures()) ++face_uses[c.plus_face], ++face_uses[c.minus_face];
    for (std::size_t f = 0; f < nf; ++f)
        if (face_uses[f] > 1) report("compatibility: face " + std::to_string(f) + " is claimed by several fracture cells");

    // Geometrically coincident faces must be topological neighbours or a fracture pair.
    std::map<std::pair<Point, Point>, std::vector<std::size_t>> geometric;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto [a, b] = m.face_nodes(f);
        geometric[std::minmax(m.nodes()[a], m.nodes()[b])].push_back(f);
    }
    for (const auto& [key, faces] : geometric) {
        if (faces.size() > 2) {
            report("conformity: more than two faces at edge of face " + std::to_string(faces[0]));
            continue;
        }
        if (faces.size() != 2) continue;
        const auto f0 = faces[0], f1 = faces[1];
        const bool neighbours = topo.face_neighbor[f0] == static_cast<long>(f1);
        const bool fracture_pair = topo.face_fracture[f0] != Topology::kNone &&
                                   topo.face_fracture[f0] == topo.face_fracture[f1];
        if (!neighbours && !fracture_pair)
            report("node duplication: faces " + std::to_string(f0) + " and " + std::to_string(f1) +
                   " coincide but are neither connected nor separated by a fracture");
    }

    // Fracture nodes at one location must be a single shared node.
    std::map<Point, std::size_t> fracture_points;
    for (std::size_t v = 0; v < nn; ++v) {
        if (topo.node_fracture_cells[v].empty()) continue;
        auto [it, inserted] = fracture_points.emplace(m.nodes()[v], v);
        if (!inserted)
            report("intersection: fracture nodes " + std::to_string(it->second) + " and " + std::to_string(v) +
                   " coincide but are not shared");
    }

    for (auto f : topo.boundary_faces)
        if (!m.tag_of(f)) report("boundary tag: boundary face " + std::to_string(f) + " has no tag");
    for (const auto& [f, tag] : m.boundary_tags()) {
        if (f >= nf || topo.face_neighbor[f] != Topology::kNone || topo.face_fracture[f] != Topology::kNone)
            report("boundary tag: tagged face " + std::to_string(f) + " is not a boundary face");
        if (tag.empty() || tag.find_first_of(" \t\n#") != std::string::npos)
            report("boundary tag: face " + std::to_string(f) + " has an invalid tag name");
    }
    return out;
}

/// Sum of triangle areas.
inline double total_area(const MixedDimMesh& m) {
    double a = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) a += triangle_geometry(m, t).area;
    return a;
}

/// Boundary face whose conditions a fracture node on ∂Ω inherits: the
/// longest tagged boundary face touching its position (smallest face id on
/// ties). Empty if the node is not on ∂Ω.
inline std::optional<std::size_t> fracture_node_facet(const MixedDimMesh& m, std::size_t v) {
    const Point p = m.nodes().at(v);
    std::optional<std::size_t> best;
    double best_len = -1.0;
    for (auto f : m.topology().boundary_faces) {
        const auto [a, b] = m.face_nodes(f);
        if (m.nodes()[a] != p && m.nodes()[b] != p) continue;
        if (!m.tag_of(f)) continue;
        const double len = m.face_length(f);
        if (len > best_len) best_len = len, best = f;
    }
    return best;
}

inline std::optional<std::string> fracture_node_tag(const MixedDimMesh& m, std::size_t v) {
    const auto f = fracture_node_facet(m, v);
    if (!f) return std::nullopt;
    return *m.tag_of(*f);
}

/// Triangle containing p (closed), searched linearly; nullopt when outside.
inline std::optional<std::size_t> locate(const MixedDimMesh& m, Point p, double eps = 1e-12) {
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& n = m.triangles()[t].nodes;
        const Point a = m.nodes()[n[0]], b = m.nodes()[n[1]], c = m.nodes()[n[2]];
        const double area2 = cross(b - a, c - a);
        const double l0 = cross(b - p, c - p) / area2, l1 = cross(c - p, a - p) / area2, l2 = cross(a - p, b - p) / area2;
        if (l0 >= -eps && l1 >= -eps && l2 >= -eps) return t;
    }
    return std::nullopt;
}

/// Barycentric coordinates of p in triangle t.
inline std::array<double, 3> barycentric(const MixedDimMesh& m, std::size_t t, Point p) {
    const auto& n = m.triangles().at(t).nodes;
    const Point a = m.nodes()[n[0]], b = m.nodes()[n[1]], c = m.nodes()[n[2]];
    const double area2 = cross(b - a, c - a);
    return {cross(b - p, c - p) / area2, cross(c - p, a - p) / area2, cross(a - p, b - p) / area2};
}

}  // namespace hmfrac::mesh
