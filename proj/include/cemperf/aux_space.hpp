#pragma once

#include "cemperf/coarse.hpp"
#include "cemperf/fem.hpp"
#include "cemperf/linalg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cemperf {

/// Eigenpairs of one block's local spectral problem a_i(φ,v) = λ s_i(φ,v).
/// Vectors are stored on the block's node set (in `nodes` order) and are
/// s_i-orthonormal; s_rows caches S_i·φ_j, the coefficients of the
/// s_i-pairing functional v ↦ s_i(v, φ_j).
struct BlockSpectrum {
    int block = -1;
    std::vector<int> nodes;          // the block's global node ids, sorted
    std::vector<double> eigenvalues; // ascending, λ_1 clamped to 0
    DenseMatrix eigenvectors;        // block nodes × l
    std::vector<std::vector<double>> s_rows;

    int l() const { return int(eigenvalues.size()); }
};

/// The auxiliary space: per non-empty block, the first l_i eigenpairs.
/// Pairings against auxiliary functions are evaluated blockwise (each φ^i_j
/// lives on its own block), which keeps cross-block s-orthogonality exact.
struct AuxSpace {
    std::vector<BlockSpectrum> entries;  // ascending block index
    std::vector<int> block_to_entry;     // grid block -> entry index or -1
    std::vector<int> coefficient_offset; // per entry, start in the flat list
    int total = 0;                       // Σ l_i

    const BlockSpectrum* spectrum_of(int block) const {
        const int e = block_to_entry[block];
        return e < 0 ? nullptr : &entries[e];
    }
};

/// Per-block element pairs restricted to K_i: exact P1 stiffness and
/// κ̃-weighted mass, dense on the block's node set.
std::pair<DenseMatrix, DenseMatrix> local_matrices(const CoarseGrid& grid,
                                                   const TriMesh& mesh,
                                                   const std::vector<double>& kappa_tilde,
                                                   int block);

/// First l eigenpairs of the pencil (A_i, S_i); eigenvalues within the clamp
/// tolerance of zero are snapped to exactly 0 (the Neumann zero mode).
EigenPairs solve_local_spectral(const DenseMatrix& A_i, const DenseMatrix& S_i,
                                int l);

/// Builds the auxiliary space with a uniform eigenfunction count per block.
AuxSpace build_aux_space(const TriMesh& mesh, const CoarseGrid& grid,
                         const std::vector<double>& kappa_tilde, int l);

/// Per-block counts (indexed by grid block; ignored for empty blocks; a count
/// of 0 contributes no auxiliary functions for that block).
AuxSpace build_aux_space(const TriMesh& mesh, const CoarseGrid& grid,
                         const std::vector<double>& kappa_tilde,
                         const std::vector<int>& l_per_block);

/// π projection of a fine field: flat coefficient list c^i_j = s_i(v, φ^i_j),
/// ordered by (block, j) with the offsets recorded in the AuxSpace.
std::vector<double> project_pi(const AuxSpace& aux, const ScalarField& v);

/// Element of the auxiliary space in blockwise (broken) form: one local
/// coefficient vector per block entry.
struct BrokenField {
    std::vector<std::vector<double>> parts; // aligned with aux.entries
};

BrokenField reconstruct_pi(const AuxSpace& aux, const std::vector<double>& coeffs);

/// π of a broken field (each part pairs only against its own block).
std::vector<double> project_pi(const AuxSpace& aux, const BrokenField& v);

/// ‖π-image‖²_s of a coefficient list (= Σ c² by s-orthonormality).
double aux_norm_sq(const std::vector<double>& coeffs);

/// Sum of the blockwise parts scattered to the global node set (for export
/// and diagnostics only; pairings must stay blockwise).
ScalarField scatter_sum(const AuxSpace& aux, const BrokenField& v,
                        std::size_t n_nodes);

/// One auxiliary function as a global field (zero outside its block).
ScalarField aux_function_field(const AuxSpace& aux, int block, int j,
                               std::size_t n_nodes);

/// CSV dump "block,lambda_1,...,lambda_l" per non-empty block.
std::string spectrum_csv(const AuxSpace& aux);

} // namespace cemperf
