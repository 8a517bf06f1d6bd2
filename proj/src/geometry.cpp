#include "cemperf/geometry.hpp"
#include "cemperf/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <random>
#include <unordered_map>

namespace cemperf {

// ---------------------------------------------------------------------------
// DomainSpec serialization
// ---------------------------------------------------------------------------

std::string DomainSpec::to_json() const {
    nlohmann::ordered_json j;
    j["disks"] = nlohmann::ordered_json::array();
    for (const Disk& d : disks) {
        j["disks"].push_back({{"cx", d.cx}, {"cy", d.cy}, {"r", d.r}});
    }
    j["seed"] = seed;
    j["allow_boundary_clip"] = allow_boundary_clip;
    return j.dump(2) + "\n";
}

DomainSpec DomainSpec::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("domain spec is not valid JSON: ") + e.what());
    }
    DomainSpec spec;
    try {
        for (const auto& jd : j.at("disks")) {
            Disk d;
            d.cx = jd.at("cx").get<double>();
            d.cy = jd.at("cy").get<double>();
            d.r = jd.at("r").get<double>();
            spec.disks.push_back(d);
        }
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.allow_boundary_clip = j.value("allow_boundary_clip", false);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("domain spec missing field: ") + e.what());
    }
    for (const Disk& d : spec.disks) {
        if (!(d.r > 0.0))
            throw ParseError("domain spec contains a disk with non-positive radius");
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Perforation generator
// ---------------------------------------------------------------------------

DomainSpec generate_perforations(int count, double r_min, double r_max,
                                 double min_gap, std::uint64_t seed) {
    if (count < 0)
        throw InvalidArgument("generate_perforations: count must be >= 0");
    if (!(r_min > 0.0) || !(r_max >= r_min) || !(r_max < 0.5))
        throw InvalidArgument("generate_perforations: need 0 < r_min <= r_max < 0.5");
    if (min_gap < 0.0)
        throw InvalidArgument("generate_perforations: min_gap must be >= 0");

    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) {
        // 53-bit mantissa draw; std::uniform_real_distribution is not
        // guaranteed to produce identical streams across standard libraries.
        const double u = double(rng() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    };

    DomainSpec spec;
    spec.seed = seed;
    spec.allow_boundary_clip = false;

    const int max_attempts_per_disk = 20000;
    for (int k = 0; k < count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < max_attempts_per_disk; ++attempt) {
            Disk d;
            d.r = uniform(r_min, r_max);
            // The outer boundary counts as an obstacle too: keeping disks at
            // least min_gap away from the walls prevents staircase notches
            // from pinching off boundary triangles on coarse fine grids.
            const double margin = d.r + min_gap;
            if (margin >= 0.5)
                continue;
            d.cx = uniform(margin, 1.0 - margin);
            d.cy = uniform(margin, 1.0 - margin);
            bool ok = d.cx > d.r && d.cx < 1.0 - d.r && d.cy > d.r && d.cy < 1.0 - d.r;
            for (const Disk& other : spec.disks) {
                if (!ok) break;
                const double dist = std::hypot(d.cx - other.cx, d.cy - other.cy);
                if (!(dist > d.r + other.r + min_gap)) ok = false;
            }
            if (ok) {
                spec.disks.push_back(d);
                placed = true;
                break;
            }
        }
        if (!placed) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "generate_perforations: placed %d of %d disks "
                          "(domain too crowded for the requested radii/gap)",
                          k, count);
            throw PlacementFailure(buf);
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// TriMesh queries
// ---------------------------------------------------------------------------

double TriMesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2& a = nodes[tri[0]];
    const Vec2& b = nodes[tri[1]];
    const Vec2& c = nodes[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Vec2 TriMesh::triangle_centroid(int t) const {
    const auto& tri = triangles[t];
    Vec2 g;
    g.x = (nodes[tri[0]].x + nodes[tri[1]].x + nodes[tri[2]].x) / 3.0;
    g.y = (nodes[tri[0]].y + nodes[tri[1]].y + nodes[tri[2]].y) / 3.0;
    return g;
}

int TriMesh::node_count(NodeTag tag) const {
    int n = 0;
    for (NodeTag t : node_tags)
        if (t == tag) ++n;
    return n;
}

namespace {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

constexpr double kOuterTol = 1e-12;

inline bool on_outer_square(const Vec2& p) {
    return std::abs(p.x) < kOuterTol || std::abs(p.x - 1.0) < kOuterTol ||
           std::abs(p.y) < kOuterTol || std::abs(p.y - 1.0) < kOuterTol;
}

} // namespace

std::vector<BoundaryEdge> TriMesh::boundary_edges() const {
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_count.reserve(triangles.size() * 3);
    for (const auto& tri : triangles) {
        for (int e = 0; e < 3; ++e)
            ++edge_count[edge_key(tri[e], tri[(e + 1) % 3])];
    }
    std::vector<BoundaryEdge> out;
    for (const auto& tri : triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e];
            const int b = tri[(e + 1) % 3];
            if (edge_count[edge_key(a, b)] != 1) continue;
            BoundaryEdge be;
            be.a = a;
            be.b = b;
            const Vec2 mid{0.5 * (nodes[a].x + nodes[b].x), 0.5 * (nodes[a].y + nodes[b].y)};
            be.tag = on_outer_square(mid) ? NodeTag::OuterDirichlet
                                          : NodeTag::PerforationNeumann;
            out.push_back(be);
        }
    }
    return out;
}

void TriMesh::check_valid() const {
    const int nn = int(nodes.size());
    if (node_tags.size() != nodes.size())
        throw InconsistentGeometry("mesh: node_tags size differs from nodes size");
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int v : tri) {
            if (v < 0 || v >= nn)
                throw InconsistentGeometry("mesh: triangle references node out of range");
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw InconsistentGeometry("mesh: triangle with repeated vertex");
        if (!(triangle_area(int(t)) > 0.0))
            throw InconsistentGeometry("mesh: non-positive triangle area (orientation?)");
    }
}

// ---------------------------------------------------------------------------
// Structured triangulation with staircase hole removal
// ---------------------------------------------------------------------------

namespace {

bool centroid_in_any_disk(const Vec2& g, const std::vector<Disk>& disks) {
    for (const Disk& d : disks)
        if (d.contains(g)) return true;
    return false;
}

void check_connected(const TriMesh& mesh) {
    const std::size_t nt = mesh.triangles.size();
    if (nt == 0) return;
    // triangle adjacency through shared edges
    std::unordered_map<std::uint64_t, std::array<int, 2>> by_edge;
    by_edge.reserve(nt * 3);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const auto key = edge_key(tri[e], tri[(e + 1) % 3]);
            auto& slot = by_edge.try_emplace(key, std::array<int, 2>{-1, -1}).first->second;
            (slot[0] < 0 ? slot[0] : slot[1]) = int(t);
        }
    }
    std::vector<char> seen(nt, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const int t = frontier.front();
        frontier.pop();
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const auto& slot = by_edge[edge_key(tri[e], tri[(e + 1) % 3])];
            for (int other : slot) {
                if (other >= 0 && !seen[other]) {
                    seen[other] = 1;
                    ++reached;
                    frontier.push(other);
                }
            }
        }
    }
    if (reached != nt)
        throw DomainDisconnected("triangulate: perforations split the domain into "
                                 "disconnected pieces");
}

} // namespace

TriMesh triangulate(const DomainSpec& spec, int n) {
    if (n < 2)
        throw InvalidArgument("triangulate: need n >= 2 fine cells per side");
    if (!spec.allow_boundary_clip) {
        for (const Disk& d : spec.disks) {
            if (!(d.cx - d.r > 0.0 && d.cx + d.r < 1.0 &&
                  d.cy - d.r > 0.0 && d.cy + d.r < 1.0))
                throw InconsistentGeometry(
                    "triangulate: disk touches the outer boundary but "
                    "allow_boundary_clip is false");
        }
    }

    const double h = 1.0 / n;
    auto grid_node = [n](int i, int j) { return j * (n + 1) + i; };

    TriMesh mesh;
    std::vector<std::array<int, 3>> raw_triangles;
    raw_triangles.reserve(std::size_t(2) * n * n);
    // Each cell split along its lower-left to upper-right diagonal; both
    // triangles counter-clockwise.
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = grid_node(i, j);
            const int v10 = grid_node(i + 1, j);
            const int v01 = grid_node(i, j + 1);
            const int v11 = grid_node(i + 1, j + 1);
            raw_triangles.push_back({v00, v10, v11});
            raw_triangles.push_back({v00, v11, v01});
        }
    }

    auto grid_point = [h](int idx, int n_) {
        const int i = idx % (n_ + 1);
        const int j = idx / (n_ + 1);
        return Vec2{i * h, j * h};
    };

    std::vector<int> node_map(std::size_t(n + 1) * (n + 1), -1);
    for (const auto& tri : raw_triangles) {
        Vec2 g;
        g.x = (grid_point(tri[0], n).x + grid_point(tri[1], n).x + grid_point(tri[2], n).x) / 3.0;
        g.y = (grid_point(tri[0], n).y + grid_point(tri[1], n).y + grid_point(tri[2], n).y) / 3.0;
        if (centroid_in_any_disk(g, spec.disks)) continue;
        std::array<int, 3> tri_out;
        for (int e = 0; e < 3; ++e) {
            if (node_map[tri[e]] < 0) {
                node_map[tri[e]] = int(mesh.nodes.size());
                mesh.nodes.push_back(grid_point(tri[e], n));
            }
            tri_out[e] = node_map[tri[e]];
        }
        mesh.triangles.push_back(tri_out);
    }

    if (mesh.triangles.empty())
        throw DomainEmpty("triangulate: every triangle was removed by the perforations");

    mesh.structured_n = n;
    mesh.node_tags.assign(mesh.nodes.size(), NodeTag::Interior);
    check_connected(mesh);
    classify_boundary(mesh, spec);
    mesh.check_valid();
    return mesh;
}

// ---------------------------------------------------------------------------
// Boundary classification
// ---------------------------------------------------------------------------

void classify_boundary(TriMesh& mesh, const DomainSpec& spec) {
    mesh.node_tags.assign(mesh.nodes.size(), NodeTag::Interior);

    double max_edge = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const Vec2& a = mesh.nodes[tri[e]];
            const Vec2& b = mesh.nodes[tri[(e + 1) % 3]];
            max_edge = std::max(max_edge, std::hypot(b.x - a.x, b.y - a.y));
        }
    }
    // A staircase node bordering a hole sits within about one edge length of
    // the circle; 1.5 leaves margin without reaching the next disk.
    const double slack = 1.5 * max_edge;

    std::vector<char> on_boundary(mesh.nodes.size(), 0);
    for (const BoundaryEdge& be : mesh.boundary_edges()) {
        on_boundary[be.a] = 1;
        on_boundary[be.b] = 1;
    }

    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        if (!on_boundary[v]) continue;
        const Vec2& p = mesh.nodes[v];
        if (on_outer_square(p)) {
            // Outer square takes precedence over any clipped disk.
            mesh.node_tags[v] = NodeTag::OuterDirichlet;
            continue;
        }
        bool near_disk = false;
        for (const Disk& d : spec.disks) {
            if (std::hypot(p.x - d.cx, p.y - d.cy) <= d.r + slack) {
                near_disk = true;
                break;
            }
        }
        if (!near_disk)
            throw InconsistentGeometry(
                "classify_boundary: boundary node matches neither the outer "
                "square nor any perforation");
        mesh.node_tags[v] = NodeTag::PerforationNeumann;
    }
}

} // namespace cemperf
