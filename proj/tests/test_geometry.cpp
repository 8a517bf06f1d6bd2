#include "cemperf/errors.hpp"
#include "cemperf/geometry.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

using namespace cemperf;

namespace {

int count_tag(const TriMesh& mesh, NodeTag tag) { return mesh.node_count(tag); }

double total_area(const TriMesh& mesh) {
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        area += mesh.triangle_area(int(t));
    return area;
}

bool on_outer_square(const Vec2& p) {
    const double tol = 1e-12;
    return std::abs(p.x) < tol || std::abs(p.x - 1.0) < tol || std::abs(p.y) < tol ||
           std::abs(p.y - 1.0) < tol;
}

} // namespace

TEST_CASE("generator: zero count gives an empty spec") {
    const DomainSpec spec = generate_perforations(0, 0.01, 0.04, 0.01, 7);
    CHECK(spec.disks.empty());
    CHECK(spec.seed == 7);
}

TEST_CASE("generator: identical parameters give byte-identical specs") {
    const DomainSpec a = generate_perforations(50, 0.01, 0.04, 0.005, 42);
    const DomainSpec b = generate_perforations(50, 0.01, 0.04, 0.005, 42);
    CHECK(a.disks.size() == 50);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("generator: disks are disjoint, gapped, and strictly inside") {
    const DomainSpec spec = generate_perforations(50, 0.01, 0.04, 0.005, 42);
    for (const Disk& d : spec.disks) {
        CHECK(d.r >= 0.01);
        CHECK(d.r <= 0.04);
        CHECK(d.cx - d.r > 0.0);
        CHECK(d.cx + d.r < 1.0);
        CHECK(d.cy - d.r > 0.0);
        CHECK(d.cy + d.r < 1.0);
    }
    for (std::size_t i = 0; i < spec.disks.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.disks.size(); ++j) {
            const Disk& a = spec.disks[i];
            const Disk& b = spec.disks[j];
            const double dist = std::hypot(a.cx - b.cx, a.cy - b.cy);
            CHECK(dist > a.r + b.r + 0.005);
        }
    }
}

TEST_CASE("generator: over-dense request fails with PlacementFailure") {
    CHECK_THROWS_AS(generate_perforations(2000, 0.04, 0.04, 0.02, 1),
                    PlacementFailure);
}

TEST_CASE("generator: argument validation") {
    CHECK_THROWS_AS(generate_perforations(-1, 0.01, 0.04, 0.01, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_perforations(1, 0.0, 0.04, 0.01, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_perforations(1, 0.04, 0.01, 0.01, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_perforations(1, 0.01, 0.6, 0.01, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_perforations(1, 0.01, 0.04, -0.1, 1), InvalidArgument);
}

TEST_CASE("triangulate: empty spec at n=2 gives the full structured grid") {
    const TriMesh mesh = triangulate(DomainSpec{}, 2);
    CHECK(mesh.nodes.size() == 9);
    CHECK(mesh.triangles.size() == 8);
    CHECK(mesh.structured_n == 2);
    const auto edges = mesh.boundary_edges();
    CHECK(edges.size() == 8);
    for (const BoundaryEdge& e : edges)
        CHECK(e.tag == NodeTag::OuterDirichlet);
}

TEST_CASE("triangulate: centered disk removes exactly the inside centroids") {
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 0.3});
    const int n = 16;
    const TriMesh mesh = triangulate(spec, n);

    // brute-force count over all 512 structured triangle centroids
    int inside = 0;
    const double h = 1.0 / n;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 v00{i * h, j * h};
            const Vec2 v10{(i + 1) * h, j * h};
            const Vec2 v11{(i + 1) * h, (j + 1) * h};
            const Vec2 v01{i * h, (j + 1) * h};
            const Vec2 c1{(v00.x + v10.x + v11.x) / 3.0, (v00.y + v10.y + v11.y) / 3.0};
            const Vec2 c2{(v00.x + v11.x + v01.x) / 3.0, (v00.y + v11.y + v01.y) / 3.0};
            inside += spec.disks[0].contains(c1) ? 1 : 0;
            inside += spec.disks[0].contains(c2) ? 1 : 0;
        }
    }
    CHECK(inside > 0);
    CHECK(int(mesh.triangles.size()) == 512 - inside);
    CHECK(total_area(mesh) ==
          doctest::Approx(1.0 - inside * h * h / 2.0).epsilon(1e-12));
}

TEST_CASE("triangulate: covering disk empties the domain") {
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 2.0});
    spec.allow_boundary_clip = true;
    CHECK_THROWS_AS(triangulate(spec, 8), DomainEmpty);
}

TEST_CASE("triangulate: boundary-clipping disk rejected unless allowed") {
    DomainSpec spec;
    spec.disks.push_back({0.05, 0.5, 0.1});
    CHECK_THROWS_AS(triangulate(spec, 8), InconsistentGeometry);
    spec.allow_boundary_clip = true;
    const TriMesh mesh = triangulate(spec, 8);
    CHECK(mesh.triangles.size() > 0);
}

TEST_CASE("triangulate: wall of disks disconnects the domain") {
    DomainSpec spec;
    spec.allow_boundary_clip = true;
    for (int k = 0; k <= 8; ++k)
        spec.disks.push_back({0.5, k / 8.0, 0.09});
    CHECK_THROWS_AS(triangulate(spec, 16), DomainDisconnected);
}

TEST_CASE("triangulate: n below 2 is rejected") {
    CHECK_THROWS_AS(triangulate(DomainSpec{}, 1), InvalidArgument);
}

TEST_CASE("triangulate: deterministic and free of orphan nodes") {
    DomainSpec spec;
    spec.disks.push_back({0.4, 0.6, 0.15});
    spec.disks.push_back({0.75, 0.3, 0.1});
    const TriMesh a = triangulate(spec, 16);
    const TriMesh b = triangulate(spec, 16);
    REQUIRE(a.nodes.size() == b.nodes.size());
    REQUIRE(a.triangles.size() == b.triangles.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].x == b.nodes[i].x);
        CHECK(a.nodes[i].y == b.nodes[i].y);
    }
    for (std::size_t t = 0; t < a.triangles.size(); ++t)
        CHECK(a.triangles[t] == b.triangles[t]);

    std::vector<bool> referenced(a.nodes.size(), false);
    for (const auto& tri : a.triangles)
        for (int v : tri) {
            REQUIRE(v >= 0);
            REQUIRE(v < int(a.nodes.size()));
            referenced[v] = true;
        }
    CHECK(std::all_of(referenced.begin(), referenced.end(), [](bool r) { return r; }));
    a.check_valid();
}

TEST_CASE("triangulate: no-disk area is exactly one") {
    const TriMesh mesh = triangulate(DomainSpec{}, 8);
    CHECK(total_area(mesh) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classify_boundary: no-disk square is all Dirichlet") {
    const TriMesh mesh = triangulate(DomainSpec{}, 8);
    CHECK(count_tag(mesh, NodeTag::PerforationNeumann) == 0);
    CHECK(count_tag(mesh, NodeTag::OuterDirichlet) == 4 * 8);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        if (on_outer_square(mesh.nodes[i]))
            CHECK(mesh.node_tags[i] == NodeTag::OuterDirichlet);
        else
            CHECK(mesh.node_tags[i] == NodeTag::Interior);
    }
}

TEST_CASE("classify_boundary: hole-adjacent boundary nodes are Neumann") {
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 0.3});
    const TriMesh mesh = triangulate(spec, 16);
    CHECK(count_tag(mesh, NodeTag::PerforationNeumann) > 0);

    // oracle: endpoints of boundary edges that are not on the outer square
    std::set<int> hole_nodes;
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const Vec2 mid{(mesh.nodes[e.a].x + mesh.nodes[e.b].x) / 2.0,
                       (mesh.nodes[e.a].y + mesh.nodes[e.b].y) / 2.0};
        if (!on_outer_square(mid)) {
            hole_nodes.insert(e.a);
            hole_nodes.insert(e.b);
        }
    }
    CHECK(!hole_nodes.empty());
    for (int v : hole_nodes) {
        if (on_outer_square(mesh.nodes[v]))
            CHECK(mesh.node_tags[v] == NodeTag::OuterDirichlet);
        else
            CHECK(mesh.node_tags[v] == NodeTag::PerforationNeumann);
    }
}

TEST_CASE("classify_boundary: outer square wins over a clipped disk") {
    DomainSpec spec;
    spec.allow_boundary_clip = true;
    spec.disks.push_back({0.0, 0.5, 0.15});
    const TriMesh mesh = triangulate(spec, 8);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (on_outer_square(mesh.nodes[i]))
            CHECK(mesh.node_tags[i] == NodeTag::OuterDirichlet);
}

TEST_CASE("classify_boundary: idempotent") {
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 0.3});
    TriMesh mesh = triangulate(spec, 16);
    const std::vector<NodeTag> before = mesh.node_tags;
    classify_boundary(mesh, spec);
    CHECK(mesh.node_tags == before);
}

TEST_CASE("domain spec JSON round-trip") {
    DomainSpec spec;
    spec.disks.push_back({0.25, 0.75, 0.05});
    spec.disks.push_back({0.5, 0.125, 0.03125});
    spec.seed = 1234;
    spec.allow_boundary_clip = true;
    const DomainSpec back = DomainSpec::from_json(spec.to_json());
    REQUIRE(back.disks.size() == 2);
    CHECK(back.disks[0].cx == 0.25);
    CHECK(back.disks[0].cy == 0.75);
    CHECK(back.disks[0].r == 0.05);
    CHECK(back.disks[1].r == 0.03125);
    CHECK(back.seed == 1234);
    CHECK(back.allow_boundary_clip);
    CHECK(back.to_json() == spec.to_json());
    CHECK_THROWS_AS(DomainSpec::from_json("{not json"), ParseError);
    CHECK_THROWS_AS(DomainSpec::from_json("{\"disks\":[{\"cx\":0.1}]}"), ParseError);
}
