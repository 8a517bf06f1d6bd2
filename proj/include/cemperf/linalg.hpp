#pragma once

#include <tuple>
#include <vector>

namespace cemperf {

// ---------------------------------------------------------------------------
// Dense matrices (row-major)
// ---------------------------------------------------------------------------

struct DenseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<double> values; // row-major, n_rows*n_cols

    DenseMatrix() = default;
    DenseMatrix(int rows, int cols)
        : n_rows(rows), n_cols(cols), values(std::size_t(rows) * cols, 0.0) {}

    double& at(int i, int j) { return values[std::size_t(i) * n_cols + j]; }
    double at(int i, int j) const { return values[std::size_t(i) * n_cols + j]; }

    static DenseMatrix identity(int n);
    DenseMatrix transposed() const;
    std::vector<double> matvec(const std::vector<double>& x) const;
};

/// Solves A X = B for SPD A by Cholesky factorization.
/// Throws NotPositiveDefinite if a pivot falls below 1e-14 times the largest
/// diagonal entry.
DenseMatrix cholesky_solve(const DenseMatrix& A, const DenseMatrix& B);

/// In-place lower Cholesky factor of an SPD matrix (upper triangle ignored
/// afterwards). Same pivot rule as cholesky_solve.
void cholesky_factor(DenseMatrix& A);

/// Triangular solves with a factor produced by cholesky_factor:
/// L y = b, then Lᵀ x = y.
void cholesky_solve_factored(const DenseMatrix& L, std::vector<double>& x);

// ---------------------------------------------------------------------------
// Sparse matrices (CSR)
// ---------------------------------------------------------------------------

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_offsets; // size n_rows+1
    std::vector<int> col_indices; // sorted, unique within each row
    std::vector<double> values;

    /// Builds CSR from triplets; duplicate (row,col) entries are summed.
    static SparseMatrix from_triplets(int rows, int cols,
                                      std::vector<Triplet> triplets);

    void matvec(const double* x, double* y) const;
    std::vector<double> matvec(const std::vector<double>& x) const;

    /// uᵀ A v
    double quad(const std::vector<double>& u, const std::vector<double>& v) const;

    double entry(int i, int j) const; // 0 if not stored

    /// Submatrix on keep×keep (keep: sorted global indices).
    SparseMatrix restricted(const std::vector<int>& keep) const;
};

struct CgInfo {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems; stops when
/// ‖A x − b‖₂ ≤ tol·‖b‖₂. Throws NoConvergence after max_iter.
std::vector<double> conjugate_gradient(const SparseMatrix& A,
                                       const std::vector<double>& b, double tol,
                                       int max_iter, CgInfo* info = nullptr);

// ---------------------------------------------------------------------------
// Banded SPD factorization
// ---------------------------------------------------------------------------

/// Cholesky factorization for SPD matrices with limited bandwidth. The fine
/// grid's natural node ordering keeps patch stiffness matrices banded, which
/// makes this dramatically cheaper than a full dense factorization while
/// staying exact.
class BandedCholesky {
  public:
    /// Factorizes the matrix given by `source` restricted to rows/cols in the
    /// contiguous local index space 0..n-1; band[i][d] holds entry (i, i-bw+d).
    BandedCholesky(int n, int bandwidth);

    double& at(int i, int j); // j in [i-bw, i]
    double at(int i, int j) const;

    void factor(); // in place; throws NotPositiveDefinite
    void solve(std::vector<double>& x) const; // L Lᵀ x = b in place

    int size() const { return n_; }
    int bandwidth() const { return bw_; }

  private:
    int n_ = 0;
    int bw_ = 0;
    std::vector<double> band_; // n rows of (bw+1) entries
};

// ---------------------------------------------------------------------------
// Generalized symmetric eigenproblem
// ---------------------------------------------------------------------------

struct EigenPairs {
    std::vector<double> values; // ascending
    DenseMatrix vectors;        // columns are the eigenvectors
};

/// Solves A x = λ B x for symmetric A and SPD B and returns the k smallest
/// pairs with B-orthonormal vectors (xᵀ B y = δ). A is reduced with the
/// Cholesky factor of B to a standard symmetric problem, which is
/// tridiagonalized (Householder) and diagonalized by implicit-shift QL.
EigenPairs generalized_symmetric_eig(const DenseMatrix& A, const DenseMatrix& B,
                                     int k);

} // namespace cemperf
