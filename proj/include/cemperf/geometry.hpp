#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cemperf {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Circular hole cut out of the unit square.
struct Disk {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;

    bool contains(const Vec2& p) const {
        const double dx = p.x - cx;
        const double dy = p.y - cy;
        return dx * dx + dy * dy < r * r;
    }
};

/// Description of a perforated unit-square domain. The actual computational
/// domain is the square minus the (approximate, staircase) union of the disks.
struct DomainSpec {
    std::vector<Disk> disks;
    std::uint64_t seed = 0;          // seed used to generate the disks (0 if manual)
    bool allow_boundary_clip = false; // permit disks to intersect the outer boundary

    std::string to_json() const;
    static DomainSpec from_json(const std::string& text);
};

/// Classification of mesh nodes. Boundary conditions are attached per node:
/// homogeneous Dirichlet on the outer square, homogeneous Neumann on the
/// perforation boundaries (the latter needs no action in the assembly).
enum class NodeTag : int {
    Interior = 0,
    OuterDirichlet = 1,
    PerforationNeumann = 2,
};

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    NodeTag tag = NodeTag::Interior;
};

/// Conforming triangulation of a perforated domain. Triangles are
/// counter-clockwise; node tags encode the boundary conditions.
struct TriMesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<NodeTag> node_tags;

    /// Fine subdivisions per side when produced by triangulate(); 0 for
    /// imported meshes that are not recognisably structured.
    int structured_n = 0;

    double triangle_area(int t) const;
    Vec2 triangle_centroid(int t) const;

    int node_count(NodeTag tag) const;

    /// Edges incident to exactly one triangle, tagged like their endpoints.
    std::vector<BoundaryEdge> boundary_edges() const;

    /// Throws if the mesh violates a structural invariant (index ranges,
    /// orientation, duplicate vertices within a triangle).
    void check_valid() const;
};

/// Draws `count` pairwise disjoint disks with radii in [r_min, r_max],
/// separated by at least `min_gap` and strictly inside the unit square.
/// Identical parameters always yield the identical spec.
DomainSpec generate_perforations(int count, double r_min, double r_max,
                                 double min_gap, std::uint64_t seed);

/// Structured n-by-n triangulation of the unit square with all triangles
/// whose centroid falls inside a disk removed (staircase approximation of
/// the holes). Nodes are compacted and classified.
TriMesh triangulate(const DomainSpec& spec, int n);

/// (Re-)derives the node tags of `mesh` from the boundary edges and `spec`.
/// Outer-square nodes win over perforation nodes. Throws InconsistentGeometry
/// if a boundary node cannot be attributed to the outer square or a disk.
void classify_boundary(TriMesh& mesh, const DomainSpec& spec);

} // namespace cemperf
