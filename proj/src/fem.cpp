#include "cemperf/fem.hpp"
#include "cemperf/errors.hpp"

#include <cmath>

namespace cemperf {

namespace {

// P1 gradients: on triangle (p0,p1,p2) with area A, the shape-function
// gradient of vertex i is (b_i, c_i)/(2A) with b/c the edge-difference
// coefficients below; the stiffness entry is (b_i b_j + c_i c_j)/(4A).
struct ElementGeometry {
    double area;
    std::array<double, 3> b;
    std::array<double, 3> c;
};

ElementGeometry element_geometry(const TriMesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& p0 = mesh.nodes[tri[0]];
    const Vec2& p1 = mesh.nodes[tri[1]];
    const Vec2& p2 = mesh.nodes[tri[2]];
    ElementGeometry g;
    g.area = mesh.triangle_area(t);
    g.b = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    g.c = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    return g;
}

} // namespace

DofMap build_dof_map(const TriMesh& mesh) {
    DofMap dofs;
    dofs.node_to_free.assign(mesh.nodes.size(), -1);
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        if (mesh.node_tags[v] != NodeTag::OuterDirichlet) {
            dofs.node_to_free[v] = int(dofs.free_nodes.size());
            dofs.free_nodes.push_back(int(v));
        }
    }
    return dofs;
}

SparseMatrix assemble_stiffness(const TriMesh& mesh) {
    std::vector<Triplet> triplets;
    triplets.reserve(9 * mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g = element_geometry(mesh, int(t));
        if (g.area < 1e-14)
            throw DegenerateTriangle("assemble_stiffness: triangle area below 1e-14");
        const auto& tri = mesh.triangles[t];
        const double inv4A = 1.0 / (4.0 * g.area);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                triplets.push_back({tri[i], tri[j],
                                    (g.b[i] * g.b[j] + g.c[i] * g.c[j]) * inv4A});
    }
    const int n = int(mesh.nodes.size());
    return SparseMatrix::from_triplets(n, n, std::move(triplets));
}

SparseMatrix assemble_weighted_mass(const TriMesh& mesh,
                                    const std::vector<double>& weight) {
    if (weight.size() != mesh.triangles.size())
        throw InvalidArgument("assemble_weighted_mass: weight length mismatch");
    std::vector<Triplet> triplets;
    triplets.reserve(9 * mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double f = weight[t] * mesh.triangle_area(int(t)) / 12.0;
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                triplets.push_back({tri[i], tri[j], f * (i == j ? 2.0 : 1.0)});
    }
    const int n = int(mesh.nodes.size());
    return SparseMatrix::from_triplets(n, n, std::move(triplets));
}

std::vector<double> assemble_load(const TriMesh& mesh,
                                  const std::vector<double>& f_per_triangle) {
    if (f_per_triangle.size() != mesh.triangles.size())
        throw InvalidArgument("assemble_load: source length mismatch");
    std::vector<double> load(mesh.nodes.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double w = f_per_triangle[t] * mesh.triangle_area(int(t)) / 3.0;
        for (int v : mesh.triangles[t]) load[v] += w;
    }
    return load;
}

std::vector<double> assemble_load_nodal(const TriMesh& mesh,
                                        const std::vector<double>& f_per_node) {
    if (f_per_node.size() != mesh.nodes.size())
        throw InvalidArgument("assemble_load_nodal: source length mismatch");
    std::vector<double> f_tri(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        f_tri[t] = (f_per_node[tri[0]] + f_per_node[tri[1]] + f_per_node[tri[2]]) / 3.0;
    }
    return assemble_load(mesh, f_tri);
}

FemSystem build_fem_system(const TriMesh& mesh,
                           const std::vector<double>& f_per_triangle) {
    FemSystem sys;
    sys.dofs = build_dof_map(mesh);
    if (sys.dofs.n_free() == int(mesh.nodes.size()))
        throw NoDirichlet("build_fem_system: mesh has no OUTER_DIRICHLET node; "
                          "the pure-Neumann system is singular");
    const SparseMatrix A_full = assemble_stiffness(mesh);
    sys.stiffness = A_full.restricted(sys.dofs.free_nodes);
    const std::vector<double> load_full = assemble_load(mesh, f_per_triangle);
    sys.load = restrict_to_free(sys.dofs, load_full);
    return sys;
}

std::vector<double> restrict_to_free(const DofMap& dofs, const ScalarField& u) {
    std::vector<double> out(dofs.free_nodes.size());
    for (std::size_t i = 0; i < dofs.free_nodes.size(); ++i)
        out[i] = u[dofs.free_nodes[i]];
    return out;
}

ScalarField expand_from_free(const DofMap& dofs, const std::vector<double>& u_free) {
    ScalarField out(dofs.node_to_free.size(), 0.0);
    for (std::size_t i = 0; i < dofs.free_nodes.size(); ++i)
        out[dofs.free_nodes[i]] = u_free[i];
    return out;
}

ScalarField solve_fine(const TriMesh& mesh, const std::vector<double>& f_per_triangle,
                       double tol, FineSolveInfo* info) {
    const FemSystem sys = build_fem_system(mesh, f_per_triangle);
    const int max_iter = std::max(1000, 40 * sys.dofs.n_free());
    CgInfo cg;
    const std::vector<double> u_free =
        conjugate_gradient(sys.stiffness, sys.load, tol, max_iter, &cg);
    if (info) *info = {cg.iterations, cg.relative_residual};
    return expand_from_free(sys.dofs, u_free);
}

// --- Norms -----------------------------------------------------------------

NormContext::NormContext(const TriMesh& mesh)
    : stiffness_full(assemble_stiffness(mesh)),
      mass_unit(assemble_weighted_mass(
          mesh, std::vector<double>(mesh.triangles.size(), 1.0))) {}

double NormContext::energy_norm(const ScalarField& u) const {
    return std::sqrt(std::max(0.0, stiffness_full.quad(u, u)));
}

double NormContext::l2_norm(const ScalarField& u) const {
    return std::sqrt(std::max(0.0, mass_unit.quad(u, u)));
}

double energy_norm(const TriMesh& mesh, const ScalarField& u) {
    const SparseMatrix A = assemble_stiffness(mesh);
    return std::sqrt(std::max(0.0, A.quad(u, u)));
}

double l2_norm(const TriMesh& mesh, const ScalarField& u) {
    const SparseMatrix M = assemble_weighted_mass(
        mesh, std::vector<double>(mesh.triangles.size(), 1.0));
    return std::sqrt(std::max(0.0, M.quad(u, u)));
}

double s_norm(const TriMesh& mesh, const ScalarField& u,
              const std::vector<double>& kappa_tilde) {
    const SparseMatrix M = assemble_weighted_mass(mesh, kappa_tilde);
    return std::sqrt(std::max(0.0, M.quad(u, u)));
}

std::pair<double, double> relative_errors(const NormContext& norms,
                                          const ScalarField& u_ref,
                                          const ScalarField& u) {
    std::vector<double> diff(u_ref.size());
    for (std::size_t i = 0; i < u_ref.size(); ++i) diff[i] = u_ref[i] - u[i];
    const double ref_l2 = norms.l2_norm(u_ref);
    const double ref_a = norms.energy_norm(u_ref);
    if (ref_l2 == 0.0 || ref_a == 0.0)
        throw ZeroReference("relative_errors: reference field has zero norm");
    return {norms.l2_norm(diff) / ref_l2, norms.energy_norm(diff) / ref_a};
}

std::pair<double, double> relative_errors(const TriMesh& mesh,
                                          const ScalarField& u_ref,
                                          const ScalarField& u) {
    return relative_errors(NormContext(mesh), u_ref, u);
}

} // namespace cemperf
