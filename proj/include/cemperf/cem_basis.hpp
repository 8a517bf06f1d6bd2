#pragma once

#include "cemperf/aux_space.hpp"
#include "cemperf/coarse.hpp"
#include "cemperf/fem.hpp"
#include "cemperf/linalg.hpp"

#include <utility>
#include <vector>

namespace cemperf {

enum class Variant {
    Constraint,
    Relaxed,
    GlobalConstraint,
    GlobalRelaxed,
};

bool is_global(Variant v);
/// The global counterpart of a localized variant (identity on global ones).
Variant global_of(Variant v);
const char* variant_name(Variant v);

/// One multiscale basis function ψ^i_j: coefficients on the free nodes of its
/// oversampling region, zero elsewhere.
struct MsBasisFunction {
    int block = -1;
    int eig_index = -1;
    int layers = 0;
    Variant variant = Variant::Constraint;
    std::vector<int> nodes; // sorted global node ids (the patch free nodes)
    std::vector<double> values;

    ScalarField to_field(std::size_t n_nodes) const;
};

/// The full basis, ordered by (block ascending, eigen index ascending). The
/// rows of the upscaling operator R are exactly these coefficient vectors.
struct MsBasisSet {
    Variant variant = Variant::Constraint;
    std::vector<MsBasisFunction> functions;
};

/// Shared read-only state for basis construction and coarse solves.
struct MsContext {
    const TriMesh& mesh;
    const CoarseGrid& grid;
    const AuxSpace& aux;
    SparseMatrix stiffness_full; // all nodes, no boundary conditions

    MsContext(const TriMesh& mesh_, const CoarseGrid& grid_, const AuxSpace& aux_);
};

/// Energy-minimization solver on one oversampling region, shared by both
/// variants. With A the patch stiffness on the free dofs and C the matrix of
/// auxiliary constraint columns (C's column (b,k) is S_b φ^b_k scattered into
/// the patch), the factorization work is X = A⁻¹C and M = CᵀX = CᵀA⁻¹C:
///   constraint:  ψ = X M⁻¹ e            (Schur complement of the saddle system)
///   relaxed:     ψ = X (I + M)⁻¹ e      ((A + CCᵀ)⁻¹ C e by Woodbury)
/// so each patch is factored exactly once for any number of basis functions
/// and both variants.
class PatchSolver {
  public:
    PatchSolver(const MsContext& ctx, OversampleRegion region);

    const OversampleRegion& region() const { return region_; }
    int n_constraints() const { return int(c_block_.size()); }

    /// Position of aux pair (block, j) in the constraint ordering; -1 when
    /// the block does not meet the patch (or carries no aux functions).
    int constraint_index(int block, int j) const;

    std::vector<double> constraint_psi(int c); // values on region().free_nodes
    std::vector<double> relaxed_psi(int c);

    /// s(ψ, φ_c) for a patch-local coefficient vector (used to verify the
    /// orthogonality constraints).
    double constraint_dot(int c, const std::vector<double>& psi_free) const;

    const DenseMatrix& constraint_gram() const { return M_; }

  private:
    std::vector<double> combine(const std::vector<double>& w) const;

    const MsContext& ctx_;
    OversampleRegion region_;
    std::vector<std::pair<int, int>> c_block_; // constraint -> (block, j)
    std::vector<std::pair<std::vector<int>, std::vector<double>>>
        c_columns_;  // sparse: local free indices + values
    BandedCholesky A_;
    DenseMatrix X_; // n_free × n_c
    DenseMatrix M_; // n_c × n_c
    DenseMatrix M_factor_, IM_factor_;
    bool m_factored_ = false;
    bool im_factored_ = false;
};

/// Saturating layer count: every block reaches the whole lattice.
int saturating_layers(const CoarseGrid& grid);

MsBasisFunction build_constraint_basis(const MsContext& ctx, int block, int j, int m);
MsBasisFunction build_relaxed_basis(const MsContext& ctx, int block, int j, int m);

/// Minimization over the full fine free space instead of a patch. Intended
/// for small problems: the dense X factor grows with (free dofs)×(aux size).
MsBasisFunction build_global_basis(const MsContext& ctx, int block, int j,
                                   Variant variant);

/// ‖ψ_glo − ψ_m‖_a for each m in m_list (energy norm of the localization
/// gap). Pass a saturated PatchSolver to amortize the global factorization
/// over many (block, j) pairs.
std::vector<std::pair<int, double>> decay_profile(const MsContext& ctx, int block,
                                                  int j, Variant variant,
                                                  const std::vector<int>& m_list,
                                                  PatchSolver* global_solver = nullptr);

/// Builds one basis function per (block, j) for each requested variant,
/// sharing the per-patch factorization across variants. Patches are
/// distributed over `threads` workers; the output ordering is deterministic
/// regardless of the schedule.
std::vector<MsBasisSet> build_basis_sets(const MsContext& ctx,
                                         const std::vector<int>& m_per_block,
                                         const std::vector<Variant>& variants,
                                         int threads);

MsBasisSet build_basis_set(const MsContext& ctx, int m, Variant variant,
                           int threads = 1);
MsBasisSet build_basis_set(const MsContext& ctx, const std::vector<int>& m_per_block,
                           Variant variant, int threads = 1);

} // namespace cemperf
