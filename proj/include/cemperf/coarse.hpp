#pragma once

#include "cemperf/geometry.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace cemperf {

/// One coarse square block K_i of the partition. Blocks own the fine
/// triangles whose centroid falls inside them.
struct CoarseBlock {
    int bi = 0; // lattice column
    int bj = 0; // lattice row
    std::vector<int> triangles;
    std::vector<int> nodes; // sorted union of the triangles' vertices
    bool empty = true;      // fully perforated blocks carry no triangles
};

/// Uniform coarse partition of the unit square into blocks_per_side² squares
/// of size H, nested in the structured fine grid.
struct CoarseGrid {
    int blocks_per_side = 0;
    double H = 0.0;
    std::vector<CoarseBlock> blocks; // row-major: index = bj*blocks_per_side + bi
    std::vector<int> element_to_block;
    int n_active = 0; // number of non-empty blocks

    // boundary edges of the fine mesh with their tags, for the oversampling
    // free-dof rule (key packs the sorted endpoint pair)
    std::unordered_map<std::uint64_t, NodeTag> boundary_edge_tags;

    int block_index(int bi, int bj) const { return bj * blocks_per_side + bi; }
};

/// Oversampled region K_{i,m}: the block K_i grown by m coarse layers
/// (Chebyshev distance in the block lattice), clipped at the domain edge.
/// Free dofs exclude global Dirichlet nodes and every node on the region's
/// cut boundary (boundary edges that are not perforation edges).
struct OversampleRegion {
    int block = -1;
    int layers = 0;
    std::vector<int> blocks;     // participating non-empty block indices
    std::vector<int> triangles;  // sorted
    std::vector<int> nodes;      // sorted
    std::vector<int> free_nodes; // sorted subset of nodes
};

/// Builds the coarse partition. Throws NonNested unless blocks_per_side
/// divides the structured fine resolution.
CoarseGrid build_coarse_grid(const TriMesh& mesh, int blocks_per_side);

/// Bilinear hat χ of the coarse vertex (gi, gj) evaluated at p.
double hat_value(const CoarseGrid& grid, int gi, int gj, const Vec2& p);

/// κ̃ = Σ_j |∇χ_j|² evaluated per fine triangle at its centroid.
std::vector<double> kappa_tilde(const CoarseGrid& grid, const TriMesh& mesh);

OversampleRegion oversample(const CoarseGrid& grid, const TriMesh& mesh, int block,
                            int layers);

} // namespace cemperf
