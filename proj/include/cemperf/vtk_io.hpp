#pragma once

#include "cemperf/geometry.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cemperf {

/// Renders the mesh with one or more per-node scalar fields as a VTK legacy
/// ASCII unstructured grid (viewable in ParaView and friends).
std::string export_vtk(const TriMesh& mesh,
                       const std::vector<std::pair<std::string, std::vector<double>>>&
                           point_fields);

} // namespace cemperf
