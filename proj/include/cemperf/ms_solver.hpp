#pragma once

#include "cemperf/cem_basis.hpp"
#include "cemperf/fem.hpp"

#include <string>
#include <vector>

namespace cemperf {

/// Coarse Galerkin solution: coefficients u_H of the multiscale basis and
/// the downscaled fine field u_ms = Rᵀ u_H.
struct MsSolution {
    std::vector<double> u_coarse;
    ScalarField u_ms; // over all mesh nodes
    double e_L2 = -1.0; // filled when a reference is supplied
    double e_H1 = -1.0;
};

/// Forms A_c = R A Rᵀ and F_c = R F over the basis rows and solves the
/// coarse system (dense Cholesky; CG above 10000 unknowns). The load is
/// taken from `system`, the stiffness from the context (they agree on the
/// free dofs).
MsSolution solve_multiscale(const MsContext& ctx, const MsBasisSet& basis,
                            const FemSystem& system);

/// Same, plus relative errors against the fine reference.
MsSolution solve_multiscale(const MsContext& ctx, const MsBasisSet& basis,
                            const FemSystem& system, const NormContext& norms,
                            const ScalarField& u_ref);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// One CSV row of an experiment (schema:
/// H,m,variant,l,e_L2,e_H1,n_fine_dofs,n_ms_dofs,wall_ms).
struct StudyRow {
    int bps = 0; // blocks per side (H = 1/bps)
    int m = 0;
    Variant variant = Variant::Constraint;
    int l = 0;
    double e_L2 = 0.0;
    double e_H1 = 0.0;
    int n_fine_dofs = 0;
    int n_ms_dofs = 0;
    double wall_ms = 0.0;
};

std::string study_csv(const std::vector<StudyRow>& rows);

/// Paired coarse sizes and layer counts: row k uses H = 1/bps_list[k] with
/// m_list[k] layers.
struct StudySchedule {
    std::vector<int> bps_list;
    std::vector<int> m_list;
};

/// Errors of the multiscale solve against the fine reference over the
/// schedule, one row per (H, m, variant). Per-patch factorizations are
/// shared between the requested variants. When `wall_override` is given
/// (replaying a recorded manifest), its values are written to the rows
/// instead of fresh measurements so that re-runs reproduce the CSV
/// byte-for-byte.
std::vector<StudyRow> convergence_study(const TriMesh& mesh,
                                        const std::vector<double>& f_per_triangle,
                                        const StudySchedule& schedule, int l,
                                        const std::vector<Variant>& variants,
                                        int threads, double fine_tol = 1e-10,
                                        const std::vector<double>* wall_override = nullptr);

/// Errors at fixed H for increasing oversampling m, plus the worst relative
/// localization gap max_{i,j} ‖ψ_glo − ψ_m‖_a / ‖ψ_glo‖_a per m.
struct DecayStudyResult {
    std::vector<StudyRow> rows; // one per (m, variant)
    std::vector<std::pair<int, double>> max_basis_decay; // per m (worst variant)
};

DecayStudyResult decay_study(const TriMesh& mesh,
                             const std::vector<double>& f_per_triangle, int bps,
                             int l, const std::vector<Variant>& variants,
                             const std::vector<int>& m_list, int threads,
                             double fine_tol = 1e-10,
                             const std::vector<double>* wall_override = nullptr);

} // namespace cemperf
