#include "cemperf/errors.hpp"
#include "cemperf/fem.hpp"
#include "cemperf/geometry.hpp"

#include "doctest.h"
#include "support/oracles.hpp"

#include <cmath>
#include <vector>

using namespace cemperf;

namespace {

TriMesh unit_right_triangle() {
    TriMesh mesh;
    mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    mesh.triangles = {{0, 1, 2}};
    mesh.node_tags = {NodeTag::OuterDirichlet, NodeTag::OuterDirichlet,
                      NodeTag::OuterDirichlet};
    return mesh;
}

DenseMatrix dense_from(const SparseMatrix& a) {
    DenseMatrix d(a.n_rows, a.n_cols);
    for (int i = 0; i < a.n_rows; ++i)
        for (int k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            d.at(i, a.col_indices[k]) = a.values[k];
    return d;
}

/// Element stiffness of one triangle by the direct gradient formula — used
/// as the assembly oracle.
DenseMatrix element_stiffness(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    const double area =
        0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
    DenseMatrix k(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            k.at(i, j) = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
    return k;
}

std::vector<double> manufactured_source(const TriMesh& mesh) {
    std::vector<double> f(mesh.triangles.size());
    const double pi = std::acos(-1.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 c = mesh.triangle_centroid(int(t));
        f[t] = 2.0 * pi * pi * std::sin(pi * c.x) * std::sin(pi * c.y);
    }
    return f;
}

double l2_interpolation_error(const TriMesh& mesh, const ScalarField& u_h) {
    const double pi = std::acos(-1.0);
    ScalarField diff(mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        diff[i] = u_h[i] - std::sin(pi * mesh.nodes[i].x) * std::sin(pi * mesh.nodes[i].y);
    return l2_norm(mesh, diff);
}

} // namespace

TEST_CASE("stiffness: single-triangle element matrix") {
    const TriMesh mesh = unit_right_triangle();
    const DenseMatrix a = dense_from(assemble_stiffness(mesh));
    const double expected[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a.at(i, j) == doctest::Approx(expected[i][j]).scale(1.0).epsilon(1e-14));
}

TEST_CASE("stiffness: row sums vanish on a perforated mesh") {
    DomainSpec spec;
    spec.disks.push_back({0.6, 0.4, 0.2});
    const TriMesh mesh = triangulate(spec, 16);
    const SparseMatrix a = assemble_stiffness(mesh);
    for (int i = 0; i < a.n_rows; ++i) {
        double sum = 0.0;
        for (int k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            sum += a.values[k];
        CHECK(std::abs(sum) <= 1e-12);
    }
}

TEST_CASE("stiffness: two-triangle square equals the sum of element matrices") {
    TriMesh mesh;
    mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
    mesh.node_tags.assign(4, NodeTag::OuterDirichlet);
    const DenseMatrix a = dense_from(assemble_stiffness(mesh));

    DenseMatrix expected(4, 4);
    const int tris[2][3] = {{0, 1, 2}, {0, 2, 3}};
    for (const auto& tri : tris) {
        const DenseMatrix k =
            element_stiffness(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                expected.at(tri[i], tri[j]) += k.at(i, j);
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(a.at(i, j) ==
                  doctest::Approx(expected.at(i, j)).scale(1.0).epsilon(1e-14));
}

TEST_CASE("stiffness: degenerate triangle rejected") {
    TriMesh mesh;
    mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 1e-16}};
    mesh.triangles = {{0, 1, 2}};
    mesh.node_tags.assign(3, NodeTag::Interior);
    CHECK_THROWS_AS(assemble_stiffness(mesh), DegenerateTriangle);
}

TEST_CASE("weighted mass: unit triangle with unit weight") {
    const TriMesh mesh = unit_right_triangle();
    const DenseMatrix m = dense_from(assemble_weighted_mass(mesh, {1.0}));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(m.at(i, j) ==
                  doctest::Approx((i == j ? 2.0 : 1.0) / 24.0).epsilon(1e-14));
    const DenseMatrix zero = dense_from(assemble_weighted_mass(mesh, {0.0}));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(zero.at(i, j) == 0.0);
}

TEST_CASE("weighted mass: positive semi-definite on random inputs") {
    DomainSpec spec;
    spec.disks.push_back({0.3, 0.3, 0.15});
    const TriMesh mesh = triangulate(spec, 8);
    oracles::Rng rng(2);
    std::vector<double> weight(mesh.triangles.size());
    for (auto& w : weight)
        w = rng.uniform(0.0, 3.0);
    const SparseMatrix m = assemble_weighted_mass(mesh, weight);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> x = rng.vector(mesh.nodes.size());
        CHECK(m.quad(x, x) >= -1e-12);
    }
}

TEST_CASE("load: zero source, partition property, and single-triangle indicator") {
    const TriMesh mesh = triangulate(DomainSpec{}, 4);
    const std::vector<double> zero =
        assemble_load(mesh, std::vector<double>(mesh.triangles.size(), 0.0));
    for (double v : zero)
        CHECK(v == 0.0);

    const std::vector<double> ones =
        assemble_load(mesh, std::vector<double>(mesh.triangles.size(), 1.0));
    double sum = 0.0;
    for (double v : ones)
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // indicator of one triangle of area 1/8 → exactly three entries of 1/24
    const TriMesh coarse = triangulate(DomainSpec{}, 2);
    std::vector<double> indicator(coarse.triangles.size(), 0.0);
    indicator[0] = 1.0;
    CHECK(coarse.triangle_area(0) == doctest::Approx(0.125).epsilon(1e-15));
    const std::vector<double> load = assemble_load(coarse, indicator);
    int nonzeros = 0;
    for (double v : load) {
        if (v != 0.0) {
            ++nonzeros;
            CHECK(v == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
        }
    }
    CHECK(nonzeros == 3);
}

TEST_CASE("load: nodal source agrees with vertex-mean per-triangle constants") {
    const TriMesh mesh = triangulate(DomainSpec{}, 4);
    std::vector<double> nodal(mesh.nodes.size());
    for (std::size_t i = 0; i < nodal.size(); ++i)
        nodal[i] = mesh.nodes[i].x + 2.0 * mesh.nodes[i].y;
    std::vector<double> per_triangle(mesh.triangles.size());
    for (std::size_t t = 0; t < per_triangle.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        per_triangle[t] = (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
    }
    const std::vector<double> a = assemble_load_nodal(mesh, nodal);
    const std::vector<double> b = assemble_load(mesh, per_triangle);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).scale(1.0).epsilon(1e-14));
}

TEST_CASE("dof map: exactly the outer Dirichlet nodes are fixed") {
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 0.2});
    const TriMesh mesh = triangulate(spec, 8);
    const DofMap dofs = build_dof_map(mesh);
    int free_count = 0;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        if (mesh.node_tags[i] == NodeTag::OuterDirichlet) {
            CHECK(dofs.node_to_free[i] == -1);
        } else {
            CHECK(dofs.node_to_free[i] >= 0);
            ++free_count;
        }
    }
    CHECK(dofs.n_free() == free_count);

    // restriction/expansion round-trip
    oracles::Rng rng(4);
    std::vector<double> u_free = rng.vector(dofs.n_free());
    const ScalarField full = expand_from_free(dofs, u_free);
    CHECK(restrict_to_free(dofs, full) == u_free);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (mesh.node_tags[i] == NodeTag::OuterDirichlet)
            CHECK(full[i] == 0.0);
}

TEST_CASE("solve_fine: zero source gives the zero field") {
    const TriMesh mesh = triangulate(DomainSpec{}, 8);
    const ScalarField u =
        solve_fine(mesh, std::vector<double>(mesh.triangles.size(), 0.0), 1e-10);
    for (double v : u)
        CHECK(v == 0.0);
}

TEST_CASE("solve_fine: no Dirichlet boundary is an error") {
    TriMesh mesh = unit_right_triangle();
    mesh.node_tags.assign(3, NodeTag::Interior);
    CHECK_THROWS_AS(
        solve_fine(mesh, std::vector<double>(mesh.triangles.size(), 1.0), 1e-10),
        NoDirichlet);
}

TEST_CASE("solve_fine: manufactured solution converges at second order") {
    const TriMesh mesh32 = triangulate(DomainSpec{}, 32);
    const TriMesh mesh64 = triangulate(DomainSpec{}, 64);
    const ScalarField u32 = solve_fine(mesh32, manufactured_source(mesh32), 1e-12);
    const ScalarField u64 = solve_fine(mesh64, manufactured_source(mesh64), 1e-12);
    const double e32 = l2_interpolation_error(mesh32, u32);
    const double e64 = l2_interpolation_error(mesh64, u64);
    const double ratio = e32 / e64;
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("solve_fine: mirror symmetry of the discrete solution") {
    const int n = 16;
    const TriMesh mesh = triangulate(DomainSpec{}, n);
    const ScalarField u =
        solve_fine(mesh, std::vector<double>(mesh.triangles.size(), 1.0), 1e-12);
    // nodes are stored in square-traversal order; locate grid points by coordinate
    std::vector<int> at(std::size_t(n + 1) * (n + 1), -1);
    for (std::size_t k = 0; k < mesh.nodes.size(); ++k) {
        const int i = int(std::lround(mesh.nodes[k].x * n));
        const int j = int(std::lround(mesh.nodes[k].y * n));
        at[std::size_t(j) * (n + 1) + i] = int(k);
    }
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const int left = at[std::size_t(j) * (n + 1) + i];
            const int right = at[std::size_t(j) * (n + 1) + (n - i)];
            REQUIRE(left >= 0);
            REQUIRE(right >= 0);
            CHECK(std::abs(u[left] - u[right]) <= 1e-9);
        }
}

TEST_CASE("norms: constants, linear fields, homogeneity") {
    const TriMesh mesh = triangulate(DomainSpec{}, 8);
    const ScalarField constant(mesh.nodes.size(), 3.25);
    CHECK(energy_norm(mesh, constant) <= 1e-12);
    CHECK(l2_norm(mesh, constant) == doctest::Approx(3.25).epsilon(1e-12));

    ScalarField linear(mesh.nodes.size());
    for (std::size_t i = 0; i < linear.size(); ++i)
        linear[i] = mesh.nodes[i].x;
    const double a = energy_norm(mesh, linear);
    CHECK(a * a == doctest::Approx(1.0).epsilon(1e-12));

    // perforated: ‖x‖²_a equals the remaining area
    DomainSpec spec;
    spec.disks.push_back({0.5, 0.5, 0.3});
    const TriMesh holed = triangulate(spec, 16);
    ScalarField lin2(holed.nodes.size());
    double area = 0.0;
    for (std::size_t t = 0; t < holed.triangles.size(); ++t)
        area += holed.triangle_area(int(t));
    for (std::size_t i = 0; i < lin2.size(); ++i)
        lin2[i] = holed.nodes[i].x;
    const double a2 = energy_norm(holed, lin2);
    CHECK(a2 * a2 == doctest::Approx(area).epsilon(1e-12));

    oracles::Rng rng(9);
    ScalarField random_field = rng.vector(mesh.nodes.size());
    const double alpha = -3.7;
    ScalarField scaled = random_field;
    for (double& v : scaled)
        v *= alpha;
    CHECK(energy_norm(mesh, scaled) ==
          doctest::Approx(std::abs(alpha) * energy_norm(mesh, random_field))
              .epsilon(1e-12));
    CHECK(l2_norm(mesh, scaled) ==
          doctest::Approx(std::abs(alpha) * l2_norm(mesh, random_field)).epsilon(1e-12));

    const std::vector<double> kt(mesh.triangles.size(), 2.0);
    CHECK(s_norm(mesh, scaled, kt) ==
          doctest::Approx(std::abs(alpha) * s_norm(mesh, random_field, kt))
              .epsilon(1e-12));
    CHECK(s_norm(mesh, constant, kt) ==
          doctest::Approx(std::sqrt(2.0) * 3.25).epsilon(1e-12));
}

TEST_CASE("relative_errors: self comparison and zero reference") {
    const TriMesh mesh = triangulate(DomainSpec{}, 8);
    const ScalarField u =
        solve_fine(mesh, std::vector<double>(mesh.triangles.size(), 1.0), 1e-10);
    const auto [e_l2, e_h1] = relative_errors(mesh, u, u);
    CHECK(e_l2 == 0.0);
    CHECK(e_h1 == 0.0);
    const ScalarField zero(mesh.nodes.size(), 0.0);
    CHECK_THROWS_AS(relative_errors(mesh, zero, u), ZeroReference);
}

TEST_CASE("norm context matches the free-function norms") {
    DomainSpec spec;
    spec.disks.push_back({0.7, 0.25, 0.12});
    const TriMesh mesh = triangulate(spec, 8);
    const NormContext ctx(mesh);
    oracles::Rng rng(12);
    const ScalarField u = rng.vector(mesh.nodes.size());
    CHECK(ctx.energy_norm(u) == doctest::Approx(energy_norm(mesh, u)).epsilon(1e-14));
    CHECK(ctx.l2_norm(u) == doctest::Approx(l2_norm(mesh, u)).epsilon(1e-14));
}
