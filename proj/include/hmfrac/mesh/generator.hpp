#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "hmfrac/mesh/mesh.hpp"
#include "hmfrac/random.hpp"

namespace hmfrac::mesh {

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(Point p, double eps = 0.0) const {
        return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
    }
};

/// Rectangular cut-out; its boundary facets are tagged with `name`.
struct Hole {
    std::string name;
    Rect rect;
};

/// Triangles whose centroid lies in `rect` get `region` (first match wins).
struct MaterialRegion {
    int region = 0;
    Rect rect;
};

struct FractureSegment {
    Point a;
    Point b;
    double delta = 0.0;
};

enum class FractureDirection { horizontal, vertical, diagonal };

/// Seeded fractures placed along grid lines.
struct RandomFractures {
    int count = 0;
    int min_cells = 2;
    int max_cells = 4;
    double delta = 1e-4;
    std::vector<FractureDirection> directions{FractureDirection::horizontal, FractureDirection::vertical,
                                              FractureDirection::diagonal};
    /// Placement window for the whole fracture; unset means the full domain.
    std::optional<Rect> window;
    int max_attempts = 1000;
};

/// Structured nx×ny grid over `extent`, each cell split along its
/// lower-left to upper-right diagonal.
struct GridSpec {
    Rect extent{0.0, 0.0, 1.0, 1.0};
    int nx = 1;
    int ny = 1;
    std::vector<Hole> holes;
    std::vector<MaterialRegion> regions;
    std::vector<FractureSegment> fractures;
    RandomFractures random;
};

namespace detail {

struct GridBuilder {
    const GridSpec& spec;
    double hx, hy;
    std::vector<Triangle> tris;                   // over original grid node ids
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_tris;
    std::set<std::pair<std::size_t, std::size_t>> fracture_edges;
    struct Edge {
        std::size_t a, b;  // oriented along the segment
        double delta;
    };
    std::vector<Edge> ordered_edges;

    explicit GridBuilder(const GridSpec& s)
        : spec(s), hx((s.extent.x1 - s.extent.x0) / s.nx), hy((s.extent.y1 - s.extent.y0) / s.ny) {}

    std::size_t id(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.nx + 1) + static_cast<std::size_t>(i);
    }
    Point coord(int i, int j) const { return {spec.extent.x0 + i * hx, spec.extent.y0 + j * hy}; }
    Point coord(std::size_t v) const {
        const auto w = static_cast<std::size_t>(spec.nx + 1);
        return coord(static_cast<int>(v % w), static_cast<int>(v / w));
    }

    int snap_x(double x) const { return static_cast<int>(std::lround((x - spec.extent.x0) / hx)); }
    int snap_y(double y) const { return static_cast<int>(std::lround((y - spec.extent.y0) / hy)); }

    bool cell_in_hole(int i, int j) const {
        for (const auto& h : spec.holes) {
            const int i0 = snap_x(h.rect.x0), i1 = snap_x(h.rect.x1), j0 = snap_y(h.rect.y0), j1 = snap_y(h.rect.y1);
            if (i >= i0 && i < i1 && j >= j0 && j < j1) return true;
        }
        return false;
    }

    void build_triangles() {
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                if (cell_in_hole(i, j)) continue;
                const auto n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
                for (const auto& nodes : {std::array{n00, n10, n11}, std::array{n00, n11, n01}}) {
                    Triangle t{nodes, 0};
                    const Point c = (1.0 / 3.0) * (coord(nodes[0]) + coord(nodes[1]) + coord(nodes[2]));
                    for (const auto& r : spec.regions)
                        if (r.rect.contains(c)) {
                            t.region = r.region;
                            break;
                        }
                    const auto ti = tris.size();
                    tris.push_back(t);
                    for (int k = 0; k < 3; ++k) {
                        const auto a = nodes[static_cast<std::size_t>((k + 1) % 3)];
                        const auto b = nodes[static_cast<std::size_t>((k + 2) % 3)];
                        edge_tris[std::minmax(a, b)].push_back(ti);
                    }
                }
            }
    }

    // Unit grid edges of the snapped segment, or an error message.
    std::string trace(int i0, int j0, int i1, int j1, std::vector<std::pair<std::size_t, std::size_t>>& edges) const {
        const int di = i1 - i0, dj = j1 - j0;
        if (di == 0 && dj == 0) return "degenerate fracture: zero length after snapping to the grid";
        if (!(di == 0 || dj == 0 || di == dj))
            return "fracture does not follow a horizontal, vertical or lower-left/upper-right diagonal grid line";
        const int steps = std::max(std::abs(di), std::abs(dj));
        const int si = (di > 0) - (di < 0), sj = (dj > 0) - (dj < 0);
        for (int s = 0; s < steps; ++s) {
            const auto a = id(i0 + s * si, j0 + s * sj), b = id(i0 + (s + 1) * si, j0 + (s + 1) * sj);
            const auto key = std::minmax(a, b);
            auto it = edge_tris.find(key);
            if (it == edge_tris.end() || it->second.size() != 2) return "fracture edge is not an interior mesh edge";
            if (fracture_edges.count(key)) return "fracture overlaps an existing fracture";
            edges.emplace_back(a, b);
        }
        return {};
    }

    void add(const std::vector<std::pair<std::size_t, std::size_t>>& edges, double delta) {
        for (auto [a, b] : edges) {
            fracture_edges.insert(std::minmax(a, b));
            ordered_edges.push_back({a, b, delta});
        }
    }

    void place_explicit() {
        const double eps = 1e-9 * std::max(hx, hy);
        for (std::size_t s = 0; s < spec.fractures.size(); ++s) {
            const auto& f = spec.fractures[s];
            const auto where = "fracture segment " + std::to_string(s) + ": ";
            if (!spec.extent.contains(f.a, eps) || !spec.extent.contains(f.b, eps))
                throw MeshError(where + "endpoint outside the domain extents");
            if (!(f.delta > 0.0)) throw MeshError(where + "cross-section must be positive");
            std::vector<std::pair<std::size_t, std::size_t>> edges;
            const auto err = trace(snap_x(f.a.x), snap_y(f.a.y), snap_x(f.b.x), snap_y(f.b.y), edges);
            if (!err.empty()) throw MeshError(where + err);
            add(edges, f.delta);
        }
    }

    void place_random(std::uint64_t seed) {
        const auto& r = spec.random;
        if (r.count <= 0) return;
        if (r.min_cells < 2 || r.max_cells < r.min_cells)
            throw MeshError("random fractures: need 2 <= min_cells <= max_cells");
        if (r.directions.empty()) throw MeshError("random fractures: no directions allowed");
        if (!(r.delta > 0.0)) throw MeshError("random fractures: cross-section must be positive");
        const Rect w = r.window.value_or(spec.extent);
        const int i_lo = std::max(0, snap_x(w.x0)), i_hi = std::min(spec.nx, snap_x(w.x1));
        const int j_lo = std::max(0, snap_y(w.y0)), j_hi = std::min(spec.ny, snap_y(w.y1));
        if (i_hi < i_lo || j_hi < j_lo) throw MeshError("random fractures: empty placement window");
        Rng rng(seed);
        for (int placed = 0; placed < r.count; ++placed) {
            bool ok = false;
            for (int attempt = 0; attempt < r.max_attempts && !ok; ++attempt) {
                const auto dir = r.directions[rng.index(r.directions.size())];
                const int len = r.min_cells + static_cast<int>(rng.index(static_cast<std::uint64_t>(r.max_cells - r.min_cells + 1)));
                const int di = dir == FractureDirection::vertical ? 0 : len;
                const int dj = dir == FractureDirection::horizontal ? 0 : len;
                if (i_hi - di < i_lo || j_hi - dj < j_lo) continue;
                const int i0 = i_lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(i_hi - di - i_lo + 1)));
                const int j0 = j_lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(j_hi - dj - j_lo + 1)));
                std::vector<std::pair<std::size_t, std::size_t>> edges;
                if (!trace(i0, j0, i0 + di, j0 + dj, edges).empty()) continue;
                add(edges, r.delta);
                ok = true;
            }
            if (!ok)
                throw MeshError("random fractures: could not place fracture " + std::to_string(placed) + " after " +
                                std::to_string(r.max_attempts) + " attempts");
        }
    }

    MixedDimMesh finish() {
        const std::size_t n_grid = id(spec.nx, spec.ny) + 1;
        std::vector<std::vector<std::size_t>> node_tris(n_grid);
        for (std::size_t t = 0; t < tris.size(); ++t)
            for (auto v : tris[t].nodes) node_tris[v].push_back(t);

        std::set<std::size_t> frac_nodes;
        for (const auto& [a, b] : fracture_edges) frac_nodes.insert(a), frac_nodes.insert(b);

        // Split the triangle fan of each fracture node into the groups
        // connected without crossing a fracture edge; one matrix node per group.
        std::vector<Point> coords;
        std::vector<std::size_t> new_id(n_grid, SIZE_MAX);
        std::vector<std::size_t> extra_origin;  // grid node of each duplicate
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> tri_node;  // (tri, grid node) → duplicate slot
        for (auto v : frac_nodes) {
            const auto& fan = node_tris[v];
            std::vector<std::size_t> parent(fan.size());
            std::iota(parent.begin(), parent.end(), 0);
            auto find = [&](std::size_t x) {
                while (parent[x] != x) x = parent[x] = parent[parent[x]];
                return x;
            };
            for (std::size_t p = 0; p < fan.size(); ++p)
                for (std::size_t q = p + 1; q < fan.size(); ++q) {
                    for (auto w : tris[fan[p]].nodes) {
                        if (w == v) continue;
                        const auto& other = tris[fan[q]].nodes;
                        if (std::find(other.begin(), other.end(), w) == other.end()) continue;
                        if (fracture_edges.count(std::minmax(v, w))) continue;
                        parent[find(p)] = find(q);
                    }
                }
            std::map<std::size_t, std::size_t> group_slot;
            for (std::size_t p = 0; p < fan.size(); ++p) {
                const auto root = find(p);
                auto it = group_slot.find(root);
                if (it == group_slot.end()) {
                    // First group (lowest triangle) keeps the grid node.
                    const auto slot = group_slot.empty() ? SIZE_MAX : extra_origin.size();
                    if (slot != SIZE_MAX) extra_origin.push_back(v);
                    it = group_slot.emplace(root, slot).first;
                }
                if (it->second != SIZE_MAX) tri_node[{fan[p], v}] = it->second;
            }
        }

        // Compact numbering: used grid nodes, then duplicates, then fracture nodes.
        std::size_t next = 0;
        for (std::size_t v = 0; v < n_grid; ++v)
            if (!node_tris[v].empty()) new_id[v] = next++, coords.push_back(coord(v));
        std::vector<std::size_t> dup_id(extra_origin.size());
        for (std::size_t s = 0; s < extra_origin.size(); ++s) dup_id[s] = next++, coords.push_back(coord(extra_origin[s]));
        std::map<std::size_t, std::size_t> frac_id;
        for (auto v : frac_nodes) frac_id[v] = next++, coords.push_back(coord(v));

        std::vector<Triangle> out_tris(tris.size());
        for (std::size_t t = 0; t < tris.size(); ++t) {
            out_tris[t].region = tris[t].region;
            for (int k = 0; k < 3; ++k) {
                const auto v = tris[t].nodes[static_cast<std::size_t>(k)];
                auto it = tri_node.find({t, v});
                out_tris[t].nodes[static_cast<std::size_t>(k)] = it == tri_node.end() ? new_id[v] : dup_id[it->second];
            }
        }

        std::vector<FractureCell> cells;
        for (const auto& e : ordered_edges) {
            const Point pa = coord(e.a), pb = coord(e.b);
            const double len = norm(pb - pa);
            FractureCell c;
            c.nodes = {frac_id[e.a], frac_id[e.b]};
            c.delta = e.delta;
            c.normal = {-(pb.y - pa.y) / len, (pb.x - pa.x) / len};
            for (auto t : edge_tris.at(std::minmax(e.a, e.b))) {
                int k = 0;
                while (tris[t].nodes[static_cast<std::size_t>(k)] == e.a || tris[t].nodes[static_cast<std::size_t>(k)] == e.b) ++k;
                const Point opposite = coord(tris[t].nodes[static_cast<std::size_t>(k)]);
                (dot(opposite - pa, c.normal) > 0.0 ? c.plus_face : c.minus_face) = face_id(t, k);
            }
            cells.push_back(c);
        }

        MixedDimMesh untagged(coords, out_tris, cells, {});
        std::map<std::size_t, std::string> tags;
        const double eps = 1e-9 * std::max(hx, hy);
        for (auto f : untagged.topology().boundary_faces) {
            const Point m = untagged.face_midpoint(f);
            std::string tag;
            for (const auto& h : spec.holes) {
                const Rect snapped{coord(snap_x(h.rect.x0), 0).x, coord(0, snap_y(h.rect.y0)).y,
                                   coord(snap_x(h.rect.x1), 0).x, coord(0, snap_y(h.rect.y1)).y};
                if (snapped.contains(m, eps)) {
                    tag = h.name;
                    break;
                }
            }
            if (tag.empty()) {
                if (std::abs(m.x - spec.extent.x0) <= eps)
                    tag = "left";
                else if (std::abs(m.x - spec.extent.x1) <= eps)
                    tag = "right";
                else if (std::abs(m.y - spec.extent.y0) <= eps)
                    tag = "bottom";
                else
                    tag = "top";
            }
            tags[f] = tag;
        }
        return MixedDimMesh(std::move(coords), std::move(out_tris), std::move(cells), std::move(tags));
    }
};

}  // namespace detail

inline std::string join_violations(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
    return s;
}

/// Builds a structured mixed-dimensional mesh. Explicit fractures are placed
/// first, then `random.count` seeded ones. Throws MeshError on bad input.
inline MixedDimMesh generate_rect_dfm(const GridSpec& spec, std::uint64_t seed = 0) {
    if (spec.nx <= 0 || spec.ny <= 0) throw MeshError("grid resolution must be positive");
    if (!(spec.extent.x1 > spec.extent.x0) || !(spec.extent.y1 > spec.extent.y0))
        throw MeshError("domain extents are empty");
    for (const auto& h : spec.holes)
        if (h.name.empty() || h.name.find_first_of(" \t#") != std::string::npos)
            throw MeshError("hole name '" + h.name + "' is not a valid tag");
    detail::GridBuilder b(spec);
    b.build_triangles();
    if (b.tris.empty()) throw MeshError("holes remove every cell");
    b.place_explicit();
    b.place_random(seed);
    auto m = b.finish();
    if (auto v = validate(m); !v.empty()) throw MeshError("generated mesh is invalid: " + join_violations(v));
    return m;
}

}  // namespace hmfrac::mesh
