#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hmfrac/mesh/generator.hpp"

namespace hmfrac::mesh {

// Format (whitespace separated, '#' starts a comment):
//   hmfrac-mesh 1
//   nodes N       then N lines: id x y
//   triangles T   then T lines: id n0 n1 n2 region
//   fractures F   then F lines: id n0 n1 delta nu_x nu_y plus_face minus_face
//   boundary B    then B lines: face_id tag
// Ids run 0..count-1 in order. Face id = 3·triangle + local edge (edge k is
// opposite vertex k).

inline void save_mesh(const MixedDimMesh& m, std::ostream& os) {
    char buf[256];
    os << "hmfrac-mesh 1\n";
    os << "nodes " << m.num_nodes() << "\n";
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, m.nodes()[i].x, m.nodes()[i].y);
        os << buf;
    }
    os << "triangles " << m.num_triangles() << "\n";
    for (std::size_t i = 0; i < m.num_triangles(); ++i) {
        const auto& t = m.triangles()[i];
        os << i << ' ' << t.nodes[0] << ' ' << t.nodes[1] << ' ' << t.nodes[2] << ' ' << t.region << '\n';
    }
    os << "fractures " << m.num_fractures() << "\n";
    for (std::size_t i = 0; i < m.num_fractures(); ++i) {
        const auto& c = m.fractures()[i];
        std::snprintf(buf, sizeof buf, "%zu %zu %zu %.17g %.17g %.17g %zu %zu\n", i, c.nodes[0], c.nodes[1], c.delta,
                      c.normal.x, c.normal.y, c.plus_face, c.minus_face);
        os << buf;
    }
    os << "boundary " << m.boundary_tags().size() << "\n";
    for (const auto& [f, tag] : m.boundary_tags()) os << f << ' ' << tag << '\n';
}

inline void save_mesh(const MixedDimMesh& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    save_mesh(m, os);
    if (!os) throw Error("failed writing '" + path + "'");
}

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    /// Next non-empty line with comments stripped; false at end of input.
    bool next(std::istringstream& out) {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_no_;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.clear();
            out.str(line);
            return true;
        }
        return false;
    }

    std::istringstream require(const std::string& what) {
        std::istringstream s;
        if (!next(s)) throw ParseError("unexpected end of file, expected " + what, line_no_ + 1);
        return s;
    }

    int line() const noexcept { return line_no_; }

private:
    std::istream& is_;
    int line_no_ = 0;
};

template <class... T>
void read_fields(std::istringstream& s, int line, const std::string& what, T&... fields) {
    if (!((s >> fields) && ...)) throw ParseError("malformed " + what + " record", line);
    std::string extra;
    if (s >> extra) throw ParseError("trailing text '" + extra + "' in " + what + " record", line);
}

inline std::size_t read_block_header(LineReader& r, const std::string& name) {
    auto s = r.require("'" + name + " <count>'");
    std::string word;
    long long count = -1;
    read_fields(s, r.line(), name + " header", word, count);
    if (word != name) throw ParseError("expected block '" + name + "', found '" + word + "'", r.line());
    if (count < 0) throw ParseError("negative count in block '" + name + "'", r.line());
    return static_cast<std::size_t>(count);
}

inline void check_id(std::size_t got, std::size_t expected, int line) {
    if (got != expected)
        throw ParseError("expected id " + std::to_string(expected) + ", found " + std::to_string(got), line);
}

}  // namespace detail

/// Parses and validates a mesh. Throws ParseError (with line) on syntax
/// problems and MeshError naming the violated invariant on invalid meshes.
inline MixedDimMesh load_mesh(std::istream& is) {
    detail::LineReader r(is);
    {
        auto s = r.require("header 'hmfrac-mesh 1'");
        std::string magic;
        int version = 0;
        if (!(s >> magic >> version) || magic != "hmfrac-mesh")
            throw ParseError("missing header 'hmfrac-mesh 1'", r.line());
        if (version != 1) throw ParseError("unsupported mesh format version " + std::to_string(version), r.line());
    }
    std::vector<Point> nodes(detail::read_block_header(r, "nodes"));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto s = r.require("node record");
        std::size_t id = 0;
        detail::read_fields(s, r.line(), "node", id, nodes[i].x, nodes[i].y);
        detail::check_id(id, i, r.line());
    }
    std::vector<Triangle> tris(detail::read_block_header(r, "triangles"));
    for (std::size_t i = 0; i < tris.size(); ++i) {
        auto s = r.require("triangle record");
        std::size_t id = 0;
        detail::read_fields(s, r.line(), "triangle", id, tris[i].nodes[0], tris[i].nodes[1], tris[i].nodes[2],
                            tris[i].region);
        detail::check_id(id, i, r.line());
    }
    std::vector<FractureCell> cells(detail::read_block_header(r, "fractures"));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto s = r.require("fracture record");
        std::size_t id = 0;
        auto& c = cells[i];
        detail::read_fields(s, r.line(), "fracture", id, c.nodes[0], c.nodes[1], c.delta, c.normal.x, c.normal.y,
                            c.plus_face, c.minus_face);
        detail::check_id(id, i, r.line());
    }
    std::map<std::size_t, std::string> tags;
    const auto nb = detail::read_block_header(r, "boundary");
    for (std::size_t i = 0; i < nb; ++i) {
        auto s = r.require("boundary record");
        std::size_t face = 0;
        std::string tag;
        detail::read_fields(s, r.line(), "boundary", face, tag);
        if (!tags.emplace(face, tag).second)
            throw ParseError("face " + std::to_string(face) + " tagged twice", r.line());
    }
    std::istringstream extra;
    if (r.next(extra)) throw ParseError("unexpected content after boundary block", r.line());

    MixedDimMesh m(std::move(nodes), std::move(tris), std::move(cells), std::move(tags));
    if (auto v = validate(m); !v.empty()) throw MeshError("invalid mesh: " + join_violations(v));
    return m;
}

inline MixedDimMesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open mesh file '" + path + "'");
    return load_mesh(is);
}

}  // namespace hmfrac::mesh
