#include "cemperf/vtk_io.hpp"
#include "cemperf/errors.hpp"

#include <cstdio>

namespace cemperf {

std::string export_vtk(const TriMesh& mesh,
                       const std::vector<std::pair<std::string, std::vector<double>>>&
                           point_fields) {
    for (const auto& [name, values] : point_fields) {
        if (values.size() != mesh.nodes.size())
            throw InvalidArgument("export_vtk: field '" + name +
                                  "' length does not match node count");
    }

    std::string out;
    out.reserve(48 * mesh.nodes.size());
    char buf[128];

    out += "# vtk DataFile Version 3.0\n";
    out += "perforated-domain scalar fields\n";
    out += "ASCII\n";
    out += "DATASET UNSTRUCTURED_GRID\n";

    std::snprintf(buf, sizeof(buf), "POINTS %zu double\n", mesh.nodes.size());
    out += buf;
    for (const Vec2& p : mesh.nodes) {
        std::snprintf(buf, sizeof(buf), "%.12g %.12g 0\n", p.x, p.y);
        out += buf;
    }

    std::snprintf(buf, sizeof(buf), "CELLS %zu %zu\n", mesh.triangles.size(),
                  4 * mesh.triangles.size());
    out += buf;
    for (const auto& tri : mesh.triangles) {
        std::snprintf(buf, sizeof(buf), "3 %d %d %d\n", tri[0], tri[1], tri[2]);
        out += buf;
    }

    std::snprintf(buf, sizeof(buf), "CELL_TYPES %zu\n", mesh.triangles.size());
    out += buf;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) out += "5\n";

    if (!point_fields.empty()) {
        std::snprintf(buf, sizeof(buf), "POINT_DATA %zu\n", mesh.nodes.size());
        out += buf;
        for (const auto& [name, values] : point_fields) {
            out += "SCALARS " + name + " float 1\n";
            out += "LOOKUP_TABLE default\n";
            for (double v : values) {
                std::snprintf(buf, sizeof(buf), "%.9g\n", v);
                out += buf;
            }
        }
    }
    return out;
}

} // namespace cemperf
