#pragma once

#include "cemperf/geometry.hpp"

#include <string>

namespace cemperf {

/// Reads a Gmsh MSH 2.2 ASCII file (subset: $MeshFormat / $Nodes / $Elements
/// with 2-node lines and 3-node triangles). Line elements carry the boundary
/// conditions through their physical tag: 1 = outer Dirichlet, 2 =
/// perforation Neumann. Triangles are reoriented counter-clockwise.
TriMesh import_msh(const std::string& text);

/// Writes the mesh in the same subset; boundary edges are emitted as line
/// elements with physical tags as above.
std::string export_msh(const TriMesh& mesh);

} // namespace cemperf
