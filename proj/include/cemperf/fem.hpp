#pragma once

#include "cemperf/geometry.hpp"
#include "cemperf/linalg.hpp"

#include <array>
#include <utility>
#include <vector>

namespace cemperf {

/// Per-node coefficients over the whole mesh; Dirichlet nodes carry 0.
using ScalarField = std::vector<double>;

/// Maps mesh nodes to free unknowns. Exactly the OUTER_DIRICHLET nodes are
/// fixed; perforation-boundary nodes stay free (natural condition).
struct DofMap {
    std::vector<int> node_to_free; // -1 for fixed nodes
    std::vector<int> free_nodes;   // ascending node indices

    int n_free() const { return int(free_nodes.size()); }
};

DofMap build_dof_map(const TriMesh& mesh);

/// Reduced fine-scale system A u = F on the free unknowns.
struct FemSystem {
    SparseMatrix stiffness; // free x free
    std::vector<double> load;
    DofMap dofs;
};

/// Exact P1 stiffness over all mesh nodes (no boundary conditions applied);
/// row sums vanish. Throws DegenerateTriangle below area 1e-14.
SparseMatrix assemble_stiffness(const TriMesh& mesh);

/// P1 mass matrix with a per-triangle weight (element matrix
/// weight*area/12 * [[2,1,1],[1,2,1],[1,1,2]]).
SparseMatrix assemble_weighted_mass(const TriMesh& mesh,
                                    const std::vector<double>& weight);

/// Load vector for a per-triangle-constant source: one-point centroid rule,
/// each vertex receives f_T * area_T / 3.
std::vector<double> assemble_load(const TriMesh& mesh,
                                  const std::vector<double>& f_per_triangle);

/// Load for nodal source values: the per-triangle constant is the vertex mean.
std::vector<double> assemble_load_nodal(const TriMesh& mesh,
                                        const std::vector<double>& f_per_node);

/// Assembles the Dirichlet-reduced system for a per-triangle-constant source.
/// Throws NoDirichlet when the mesh has no OUTER_DIRICHLET node.
FemSystem build_fem_system(const TriMesh& mesh,
                           const std::vector<double>& f_per_triangle);

/// Restricts a full-length field to the free unknowns.
std::vector<double> restrict_to_free(const DofMap& dofs, const ScalarField& u);

/// Scatters free unknowns back to a full-length field (zeros on fixed nodes).
ScalarField expand_from_free(const DofMap& dofs, const std::vector<double>& u_free);

struct FineSolveInfo {
    int cg_iterations = 0;
    double cg_residual = 0.0;
};

/// Fine-scale reference solve by Jacobi-preconditioned CG on the reduced
/// system; returns the full-length field.
ScalarField solve_fine(const TriMesh& mesh, const std::vector<double>& f_per_triangle,
                       double tol, FineSolveInfo* info = nullptr);

// --- Norms -----------------------------------------------------------------

/// Caches the matrices behind the three norms so repeated evaluations stay
/// cheap: ‖u‖²_a = uᵀA u, ‖u‖² = uᵀM u, ‖u‖²_s = uᵀM_κ̃ u.
struct NormContext {
    SparseMatrix stiffness_full; // all nodes, no BC
    SparseMatrix mass_unit;

    explicit NormContext(const TriMesh& mesh);

    double energy_norm(const ScalarField& u) const;
    double l2_norm(const ScalarField& u) const;
};

double energy_norm(const TriMesh& mesh, const ScalarField& u);
double l2_norm(const TriMesh& mesh, const ScalarField& u);
double s_norm(const TriMesh& mesh, const ScalarField& u,
              const std::vector<double>& kappa_tilde);

/// (e_L2, e_H1) of `u` against the reference `u_ref`:
/// e_L2 = ‖u_ref − u‖ / ‖u_ref‖, e_H1 = ‖u_ref − u‖_a / ‖u_ref‖_a.
/// Throws ZeroReference when a denominator vanishes.
std::pair<double, double> relative_errors(const NormContext& norms,
                                          const ScalarField& u_ref,
                                          const ScalarField& u);
std::pair<double, double> relative_errors(const TriMesh& mesh,
                                          const ScalarField& u_ref,
                                          const ScalarField& u);

} // namespace cemperf
