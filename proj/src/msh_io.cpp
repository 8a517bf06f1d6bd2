#include "cemperf/msh_io.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace cemperf {

namespace {

// Recovers the fine subdivision count when the node set sits on a uniform
// k/n lattice (meshes produced by triangulate() and re-imported). Returns 0
// when no such n exists.
int detect_structured_n(const TriMesh& mesh) {
    double min_gap = 1.0;
    std::vector<double> xs;
    xs.reserve(mesh.nodes.size());
    for (const Vec2& p : mesh.nodes) xs.push_back(p.x);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double gap = xs[i] - xs[i - 1];
        if (gap > 1e-9) min_gap = std::min(min_gap, gap);
    }
    const int n = int(std::lround(1.0 / min_gap));
    if (n < 2 || n > 100000) return 0;
    for (const Vec2& p : mesh.nodes) {
        for (double c : {p.x, p.y}) {
            if (std::abs(c * n - std::lround(c * n)) > 1e-9 * n) return 0;
        }
    }
    return n;
}

std::string next_content_line(std::istringstream& in) {
    std::string line;
    while (std::getline(in, line)) {
        // strip trailing CR from files written on other platforms
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) return line;
    }
    return {};
}

} // namespace

TriMesh import_msh(const std::string& text) {
    std::istringstream in(text);
    TriMesh mesh;
    std::unordered_map<long, int> id_to_index;
    bool saw_format = false;

    std::string line;
    while (!(line = next_content_line(in)).empty()) {
        if (line == "$MeshFormat") {
            std::istringstream fmt(next_content_line(in));
            std::string version;
            int file_type = -1, data_size = -1;
            fmt >> version >> file_type >> data_size;
            if (version.empty() || file_type < 0)
                throw ParseError("msh: malformed $MeshFormat line");
            if (version.rfind("2.2", 0) != 0)
                throw UnsupportedVersion("msh: only MSH version 2.2 is supported, got " +
                                         version);
            if (file_type != 0)
                throw ParseError("msh: binary MSH files are not supported");
            if (next_content_line(in) != "$EndMeshFormat")
                throw ParseError("msh: missing $EndMeshFormat");
            saw_format = true;
        } else if (line == "$Nodes") {
            if (!saw_format) throw ParseError("msh: $Nodes before $MeshFormat");
            std::istringstream hdr(next_content_line(in));
            long count = -1;
            hdr >> count;
            if (count < 0) throw ParseError("msh: bad node count");
            for (long k = 0; k < count; ++k) {
                std::istringstream ns(next_content_line(in));
                long id;
                double x, y, z;
                if (!(ns >> id >> x >> y >> z))
                    throw ParseError("msh: malformed node line");
                id_to_index[id] = int(mesh.nodes.size());
                mesh.nodes.push_back({x, y});
            }
            if (next_content_line(in) != "$EndNodes")
                throw ParseError("msh: missing $EndNodes");
        } else if (line == "$Elements") {
            if (mesh.nodes.empty()) throw ParseError("msh: $Elements before $Nodes");
            mesh.node_tags.assign(mesh.nodes.size(), NodeTag::Interior);
            std::istringstream hdr(next_content_line(in));
            long count = -1;
            hdr >> count;
            if (count < 0) throw ParseError("msh: bad element count");

            std::vector<std::pair<std::array<int, 2>, int>> tagged_lines;
            for (long k = 0; k < count; ++k) {
                std::istringstream es(next_content_line(in));
                long id;
                int type = -1, ntags = -1;
                if (!(es >> id >> type >> ntags))
                    throw ParseError("msh: malformed element line");
                std::vector<long> tags(ntags);
                for (int t = 0; t < ntags; ++t)
                    if (!(es >> tags[t])) throw ParseError("msh: truncated element tags");

                auto read_node = [&]() {
                    long nid;
                    if (!(es >> nid)) throw ParseError("msh: truncated element nodes");
                    auto it = id_to_index.find(nid);
                    if (it == id_to_index.end())
                        throw ParseError("msh: element references unknown node id");
                    return it->second;
                };

                if (type == 1) { // 2-node line: boundary condition carrier
                    if (ntags < 1)
                        throw MissingTags("msh: boundary line element without a "
                                          "physical tag");
                    const int a = read_node();
                    const int b = read_node();
                    const long phys = tags[0];
                    if (phys != 1 && phys != 2)
                        throw ParseError("msh: line element physical tag must be 1 "
                                         "(outer Dirichlet) or 2 (perforation Neumann)");
                    tagged_lines.push_back({{a, b}, int(phys)});
                } else if (type == 2) { // 3-node triangle
                    std::array<int, 3> tri{read_node(), read_node(), read_node()};
                    mesh.triangles.push_back(tri);
                } else if (type == 15) { // isolated point elements: ignore
                    read_node();
                } else {
                    throw ParseError("msh: unsupported element type " +
                                     std::to_string(type));
                }
            }
            if (next_content_line(in) != "$EndElements")
                throw ParseError("msh: missing $EndElements");

            // Neumann first so that Dirichlet wins on shared corner nodes.
            for (const auto& [nodes, phys] : tagged_lines)
                if (phys == 2)
                    for (int v : nodes) mesh.node_tags[v] = NodeTag::PerforationNeumann;
            for (const auto& [nodes, phys] : tagged_lines)
                if (phys == 1)
                    for (int v : nodes) mesh.node_tags[v] = NodeTag::OuterDirichlet;
        } else if (!line.empty() && line[0] == '$') {
            // unknown section (e.g. $PhysicalNames): skip to its terminator
            const std::string end = "$End" + line.substr(1);
            std::string skip;
            bool closed = false;
            while (!(skip = next_content_line(in)).empty()) {
                if (skip == end) {
                    closed = true;
                    break;
                }
            }
            if (!closed) throw ParseError("msh: unterminated section " + line);
        } else {
            throw ParseError("msh: unexpected content: " + line);
        }
    }

    if (!saw_format) throw ParseError("msh: no $MeshFormat section");
    if (mesh.triangles.empty()) throw ParseError("msh: file contains no triangles");
    if (mesh.node_tags.empty())
        mesh.node_tags.assign(mesh.nodes.size(), NodeTag::Interior);

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double area = mesh.triangle_area(int(t));
        if (area == 0.0)
            throw ParseError("msh: degenerate (zero-area) triangle");
        if (area < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
    }
    mesh.check_valid();
    mesh.structured_n = detect_structured_n(mesh);
    return mesh;
}

std::string export_msh(const TriMesh& mesh) {
    std::string out;
    out.reserve(64 * mesh.nodes.size());
    char buf[160];

    out += "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n";
    std::snprintf(buf, sizeof(buf), "%zu\n", mesh.nodes.size());
    out += buf;
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g 0\n", v + 1,
                      mesh.nodes[v].x, mesh.nodes[v].y);
        out += buf;
    }
    out += "$EndNodes\n$Elements\n";

    const std::vector<BoundaryEdge> edges = mesh.boundary_edges();
    std::snprintf(buf, sizeof(buf), "%zu\n", edges.size() + mesh.triangles.size());
    out += buf;
    std::size_t eid = 1;
    for (const BoundaryEdge& be : edges) {
        const int phys = (be.tag == NodeTag::OuterDirichlet) ? 1 : 2;
        std::snprintf(buf, sizeof(buf), "%zu 1 2 %d %d %d %d\n", eid++, phys, phys,
                      be.a + 1, be.b + 1);
        out += buf;
    }
    for (const auto& tri : mesh.triangles) {
        std::snprintf(buf, sizeof(buf), "%zu 2 2 3 3 %d %d %d\n", eid++, tri[0] + 1,
                      tri[1] + 1, tri[2] + 1);
        out += buf;
    }
    out += "$EndElements\n";
    return out;
}

} // namespace cemperf
