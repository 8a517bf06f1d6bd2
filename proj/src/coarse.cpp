#include "cemperf/coarse.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cemperf {

namespace {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

CoarseGrid build_coarse_grid(const TriMesh& mesh, int blocks_per_side) {
    if (blocks_per_side < 1)
        throw InvalidArgument("build_coarse_grid: blocks_per_side must be >= 1");
    if (mesh.structured_n <= 0 || mesh.structured_n % blocks_per_side != 0)
        throw NonNested("build_coarse_grid: blocks_per_side must divide the "
                        "structured fine resolution n");

    CoarseGrid grid;
    grid.blocks_per_side = blocks_per_side;
    grid.H = 1.0 / blocks_per_side;
    grid.blocks.resize(std::size_t(blocks_per_side) * blocks_per_side);
    for (int bj = 0; bj < blocks_per_side; ++bj) {
        for (int bi = 0; bi < blocks_per_side; ++bi) {
            CoarseBlock& b = grid.blocks[grid.block_index(bi, bj)];
            b.bi = bi;
            b.bj = bj;
        }
    }

    grid.element_to_block.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 g = mesh.triangle_centroid(int(t));
        // centroids of the structured triangles never sit on a block line
        const int bi = std::min(blocks_per_side - 1, int(g.x / grid.H));
        const int bj = std::min(blocks_per_side - 1, int(g.y / grid.H));
        const int idx = grid.block_index(bi, bj);
        grid.element_to_block[t] = idx;
        grid.blocks[idx].triangles.push_back(int(t));
    }

    grid.n_active = 0;
    for (CoarseBlock& b : grid.blocks) {
        b.empty = b.triangles.empty();
        if (b.empty) continue;
        ++grid.n_active;
        std::vector<int> nodes;
        nodes.reserve(3 * b.triangles.size());
        for (int t : b.triangles)
            for (int v : mesh.triangles[t]) nodes.push_back(v);
        b.nodes = sorted_unique(std::move(nodes));
    }

    for (const BoundaryEdge& be : mesh.boundary_edges())
        grid.boundary_edge_tags[edge_key(be.a, be.b)] = be.tag;

    return grid;
}

double hat_value(const CoarseGrid& grid, int gi, int gj, const Vec2& p) {
    const double sx = 1.0 - std::abs(p.x / grid.H - gi);
    const double sy = 1.0 - std::abs(p.y / grid.H - gj);
    return std::max(0.0, sx) * std::max(0.0, sy);
}

std::vector<double> kappa_tilde(const CoarseGrid& grid, const TriMesh& mesh) {
    const double H = grid.H;
    std::vector<double> out(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 g = mesh.triangle_centroid(int(t));
        const int ci = std::min(grid.blocks_per_side - 1, int(g.x / H));
        const int cj = std::min(grid.blocks_per_side - 1, int(g.y / H));
        const double xi = g.x / H - ci;
        const double eta = g.y / H - cj;
        // the four bilinear hats alive on this coarse cell, |∇χ|² summed:
        // 2/H² · (ξ² + (1−ξ)² + η² + (1−η)²)
        out[t] = 2.0 / (H * H) *
                 (xi * xi + (1.0 - xi) * (1.0 - xi) + eta * eta +
                  (1.0 - eta) * (1.0 - eta));
    }
    return out;
}

OversampleRegion oversample(const CoarseGrid& grid, const TriMesh& mesh, int block,
                            int layers) {
    if (block < 0 || block >= int(grid.blocks.size()))
        throw InvalidArgument("oversample: block index out of range");
    if (grid.blocks[block].empty)
        throw InvalidArgument("oversample: block is EMPTY (fully perforated)");
    if (layers < 0) throw InvalidArgument("oversample: layers must be >= 0");

    const int bps = grid.blocks_per_side;
    const int ci = grid.blocks[block].bi;
    const int cj = grid.blocks[block].bj;

    OversampleRegion region;
    region.block = block;
    region.layers = layers;

    for (int bj = std::max(0, cj - layers); bj <= std::min(bps - 1, cj + layers); ++bj) {
        for (int bi = std::max(0, ci - layers); bi <= std::min(bps - 1, ci + layers);
             ++bi) {
            const int idx = grid.block_index(bi, bj);
            if (grid.blocks[idx].empty) continue;
            region.blocks.push_back(idx);
            for (int t : grid.blocks[idx].triangles) region.triangles.push_back(t);
        }
    }
    std::sort(region.blocks.begin(), region.blocks.end());
    std::sort(region.triangles.begin(), region.triangles.end());

    std::vector<int> nodes;
    nodes.reserve(3 * region.triangles.size());
    for (int t : region.triangles)
        for (int v : mesh.triangles[t]) nodes.push_back(v);
    region.nodes = sorted_unique(std::move(nodes));

    // Boundary edges of the region submesh; an edge that is not a perforation
    // edge of the global mesh is a cut (or outer) edge and pins its endpoints.
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_count.reserve(3 * region.triangles.size());
    for (int t : region.triangles) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) ++edge_count[edge_key(tri[e], tri[(e + 1) % 3])];
    }
    std::vector<char> pinned(mesh.nodes.size(), 0);
    for (const auto& [key, count] : edge_count) {
        if (count != 1) continue;
        const auto it = grid.boundary_edge_tags.find(key);
        const bool hole_edge =
            it != grid.boundary_edge_tags.end() && it->second == NodeTag::PerforationNeumann;
        if (hole_edge) continue;
        pinned[int(key >> 32)] = 1;
        pinned[int(key & 0xffffffffu)] = 1;
    }

    region.free_nodes.reserve(region.nodes.size());
    for (int v : region.nodes) {
        if (mesh.node_tags[v] == NodeTag::OuterDirichlet) continue;
        if (pinned[v]) continue;
        region.free_nodes.push_back(v);
    }
    return region;
}

} // namespace cemperf
