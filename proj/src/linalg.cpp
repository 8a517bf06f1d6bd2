#include "cemperf/linalg.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cemperf {

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(n_cols, n_rows);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

std::vector<double> DenseMatrix::matvec(const std::vector<double>& x) const {
    std::vector<double> y(n_rows, 0.0);
    for (int i = 0; i < n_rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_cols; ++j) s += at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

void cholesky_factor(DenseMatrix& A) {
    if (A.n_rows != A.n_cols || A.n_rows == 0)
        throw InvalidArgument("cholesky_factor: matrix must be square and non-empty");
    const int n = A.n_rows;
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A.at(i, i)));
    const double pivot_floor = 1e-14 * std::max(max_diag, 1e-300);

    for (int j = 0; j < n; ++j) {
        double d = A.at(j, j);
        for (int k = 0; k < j; ++k) d -= A.at(j, k) * A.at(j, k);
        if (d <= pivot_floor)
            throw NotPositiveDefinite("cholesky_factor: pivot below tolerance");
        const double ljj = std::sqrt(d);
        A.at(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = A.at(i, j);
            for (int k = 0; k < j; ++k) s -= A.at(i, k) * A.at(j, k);
            A.at(i, j) = s / ljj;
        }
    }
}

void cholesky_solve_factored(const DenseMatrix& L, std::vector<double>& x) {
    const int n = L.n_rows;
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= L.at(i, k) * x[k];
        x[i] = s / L.at(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= L.at(k, i) * x[k];
        x[i] = s / L.at(i, i);
    }
}

DenseMatrix cholesky_solve(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.n_rows != B.n_rows)
        throw InvalidArgument("cholesky_solve: dimension mismatch");
    DenseMatrix L = A;
    cholesky_factor(L);
    DenseMatrix X = B;
    std::vector<double> col(A.n_rows);
    for (int j = 0; j < B.n_cols; ++j) {
        for (int i = 0; i < A.n_rows; ++i) col[i] = B.at(i, j);
        cholesky_solve_factored(L, col);
        for (int i = 0; i < A.n_rows; ++i) X.at(i, j) = col[i];
    }
    return X;
}

// ---------------------------------------------------------------------------
// Sparse CSR
// ---------------------------------------------------------------------------

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<Triplet> triplets) {
    if (rows < 0 || cols < 0)
        throw InvalidArgument("from_triplets: negative dimensions");
    for (const Triplet& t : triplets) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw InvalidArgument("from_triplets: index out of range");
    }
    // stable: duplicates must accumulate in insertion order so that repeated
    // assemblies produce bit-identical sums
    std::stable_sort(triplets.begin(), triplets.end(),
                     [](const Triplet& a, const Triplet& b) {
                         return a.row != b.row ? a.row < b.row : a.col < b.col;
                     });

    SparseMatrix m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.row_offsets.assign(std::size_t(rows) + 1, 0);
    m.col_indices.reserve(triplets.size());
    m.values.reserve(triplets.size());

    std::size_t k = 0;
    for (int r = 0; r < rows; ++r) {
        while (k < triplets.size() && triplets[k].row == r) {
            const int c = triplets[k].col;
            double v = 0.0;
            while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c)
                v += triplets[k++].value;
            m.col_indices.push_back(c);
            m.values.push_back(v);
        }
        m.row_offsets[std::size_t(r) + 1] = int(m.col_indices.size());
    }
    return m;
}

void SparseMatrix::matvec(const double* x, double* y) const {
    for (int i = 0; i < n_rows; ++i) {
        double s = 0.0;
        for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            s += values[k] * x[col_indices[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::matvec(const std::vector<double>& x) const {
    if (int(x.size()) != n_cols)
        throw InvalidArgument("matvec: vector length mismatch");
    std::vector<double> y(n_rows);
    matvec(x.data(), y.data());
    return y;
}

double SparseMatrix::quad(const std::vector<double>& u,
                          const std::vector<double>& v) const {
    if (int(u.size()) != n_rows || int(v.size()) != n_cols)
        throw InvalidArgument("quad: vector length mismatch");
    double total = 0.0;
    for (int i = 0; i < n_rows; ++i) {
        double s = 0.0;
        for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            s += values[k] * v[col_indices[k]];
        total += u[i] * s;
    }
    return total;
}

double SparseMatrix::entry(int i, int j) const {
    const int lo = row_offsets[i];
    const int hi = row_offsets[i + 1];
    const auto first = col_indices.begin() + lo;
    const auto last = col_indices.begin() + hi;
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[lo + int(it - first)];
}

SparseMatrix SparseMatrix::restricted(const std::vector<int>& keep) const {
    std::vector<int> global_to_local(n_cols, -1);
    for (std::size_t l = 0; l < keep.size(); ++l) global_to_local[keep[l]] = int(l);

    std::vector<Triplet> triplets;
    for (std::size_t li = 0; li < keep.size(); ++li) {
        const int gi = keep[li];
        for (int k = row_offsets[gi]; k < row_offsets[gi + 1]; ++k) {
            const int lj = global_to_local[col_indices[k]];
            if (lj >= 0) triplets.push_back({int(li), lj, values[k]});
        }
    }
    return from_triplets(int(keep.size()), int(keep.size()), std::move(triplets));
}

// ---------------------------------------------------------------------------
// Conjugate gradients (Jacobi preconditioned)
// ---------------------------------------------------------------------------

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

} // namespace

std::vector<double> conjugate_gradient(const SparseMatrix& A,
                                       const std::vector<double>& b, double tol,
                                       int max_iter, CgInfo* info) {
    if (A.n_rows != A.n_cols || int(b.size()) != A.n_rows)
        throw InvalidArgument("conjugate_gradient: dimension mismatch");
    const int n = A.n_rows;

    std::vector<double> x(n, 0.0);
    const double b_norm = norm2(b);
    if (b_norm == 0.0) {
        if (info) *info = {0, 0.0};
        return x;
    }

    std::vector<double> inv_diag(n, 1.0);
    for (int i = 0; i < n; ++i) {
        const double d = A.entry(i, i);
        if (d > 0.0) inv_diag[i] = 1.0 / d;
    }

    std::vector<double> r = b;
    std::vector<double> z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    for (int iter = 1; iter <= max_iter; ++iter) {
        A.matvec(p.data(), Ap.data());
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0))
            throw NoConvergence("conjugate_gradient: non-positive curvature "
                                "(matrix not SPD?)");
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        const double rel = norm2(r) / b_norm;
        if (rel <= tol) {
            if (info) *info = {iter, rel};
            return x;
        }
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NoConvergence("conjugate_gradient: tolerance not reached within "
                        "iteration budget");
}

// ---------------------------------------------------------------------------
// Banded Cholesky
// ---------------------------------------------------------------------------

BandedCholesky::BandedCholesky(int n, int bandwidth) : n_(n), bw_(bandwidth) {
    if (n <= 0 || bandwidth < 0)
        throw InvalidArgument("BandedCholesky: bad dimensions");
    band_.assign(std::size_t(n) * (bw_ + 1), 0.0);
}

double& BandedCholesky::at(int i, int j) {
    return band_[std::size_t(i) * (bw_ + 1) + (j - i + bw_)];
}

double BandedCholesky::at(int i, int j) const {
    return band_[std::size_t(i) * (bw_ + 1) + (j - i + bw_)];
}

void BandedCholesky::factor() {
    double max_diag = 0.0;
    for (int i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(at(i, i)));
    const double pivot_floor = 1e-14 * std::max(max_diag, 1e-300);

    for (int i = 0; i < n_; ++i) {
        const int k_lo = std::max(0, i - bw_);
        for (int j = k_lo; j <= i; ++j) {
            double s = at(i, j);
            for (int k = k_lo; k < j; ++k) s -= at(i, k) * at(j, k);
            if (i == j) {
                if (s <= pivot_floor)
                    throw NotPositiveDefinite("BandedCholesky: pivot below tolerance");
                at(i, i) = std::sqrt(s);
            } else {
                at(i, j) = s / at(j, j);
            }
        }
    }
}

void BandedCholesky::solve(std::vector<double>& x) const {
    for (int i = 0; i < n_; ++i) {
        double s = x[i];
        for (int k = std::max(0, i - bw_); k < i; ++k) s -= at(i, k) * x[k];
        x[i] = s / at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
        double s = x[i];
        const int k_hi = std::min(n_ - 1, i + bw_);
        for (int k = i + 1; k <= k_hi; ++k) s -= at(k, i) * x[k];
        x[i] = s / at(i, i);
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver: Householder tridiagonalization + implicit QL
// ---------------------------------------------------------------------------

namespace {

// Reduces the symmetric matrix stored in `a` to tridiagonal form (diagonal d,
// off-diagonal e) and replaces `a` with the accumulated orthogonal transform.
// Classic Householder scheme (EISPACK tred2 lineage).
void tridiagonalize(DenseMatrix& a, std::vector<double>& d, std::vector<double>& e) {
    const int n = a.n_rows;
    d.assign(n, 0.0);
    e.assign(n, 0.0);

    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0;
        double scale = 0.0;
        if (l > 0) {
            for (int k = 0; k <= l; ++k) scale += std::abs(a.at(i, k));
            if (scale == 0.0) {
                e[i] = a.at(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    a.at(i, k) /= scale;
                    h += a.at(i, k) * a.at(i, k);
                }
                double f = a.at(i, l);
                double g = (f >= 0.0 ? -std::sqrt(h) : std::sqrt(h));
                e[i] = scale * g;
                h -= f * g;
                a.at(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    a.at(j, i) = a.at(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += a.at(j, k) * a.at(i, k);
                    for (int k = j + 1; k <= l; ++k) g += a.at(k, j) * a.at(i, k);
                    e[j] = g / h;
                    f += e[j] * a.at(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = a.at(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k)
                        a.at(j, k) -= f * e[k] + g * a.at(i, k);
                }
            }
        } else {
            e[i] = a.at(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = i - 1;
        if (d[i] != 0.0) {
            for (int j = 0; j <= l; ++j) {
                double g = 0.0;
                for (int k = 0; k <= l; ++k) g += a.at(i, k) * a.at(k, j);
                for (int k = 0; k <= l; ++k) a.at(k, j) -= g * a.at(k, i);
            }
        }
        d[i] = a.at(i, i);
        a.at(i, i) = 1.0;
        for (int j = 0; j <= l; ++j) a.at(j, i) = a.at(i, j) = 0.0;
    }
}

// Implicit-shift QL on a tridiagonal matrix, rotations accumulated into z.
void ql_implicit(std::vector<double>& d, std::vector<double>& e, DenseMatrix& z) {
    const int n = int(d.size());
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) + dd == dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw NoConvergence("eigensolver: QL iteration cap reached");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    e[i + 1] = r = std::hypot(f, g);
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    d[i + 1] = g + (p = s * r);
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z.at(k, i + 1);
                        z.at(k, i + 1) = s * z.at(k, i) + c * f;
                        z.at(k, i) = c * z.at(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace

EigenPairs generalized_symmetric_eig(const DenseMatrix& A, const DenseMatrix& B,
                                     int k) {
    const int n = A.n_rows;
    if (A.n_cols != n || B.n_rows != n || B.n_cols != n)
        throw InvalidArgument("generalized_symmetric_eig: shape mismatch");
    if (k < 1 || k > n)
        throw InvalidArgument("generalized_symmetric_eig: need 1 <= k <= n");

    double max_abs = 0.0, max_asym = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            max_abs = std::max(max_abs, std::abs(A.at(i, j)));
            max_asym = std::max(max_asym, std::abs(A.at(i, j) - A.at(j, i)));
        }
    }
    if (max_asym > 1e-10 * std::max(max_abs, 1e-300))
        throw InvalidArgument("generalized_symmetric_eig: A is not symmetric");

    DenseMatrix L = B;
    cholesky_factor(L); // throws NotPositiveDefinite if B is not SPD

    auto forward_solve = [&L, n](std::vector<double>& v) {
        for (int i = 0; i < n; ++i) {
            double s = v[i];
            for (int j = 0; j < i; ++j) s -= L.at(i, j) * v[j];
            v[i] = s / L.at(i, i);
        }
    };
    auto backward_solve_t = [&L, n](std::vector<double>& v) {
        // solves Lᵀ x = v
        for (int i = n - 1; i >= 0; --i) {
            double s = v[i];
            for (int j = i + 1; j < n; ++j) s -= L.at(j, i) * v[j];
            v[i] = s / L.at(i, i);
        }
    };

    // C = L⁻¹ A L⁻ᵀ via two sweeps of forward solves.
    DenseMatrix W(n, n);
    std::vector<double> col(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) col[i] = A.at(i, j);
        forward_solve(col);
        for (int i = 0; i < n; ++i) W.at(i, j) = col[i];
    }
    DenseMatrix C(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) col[i] = W.at(j, i); // row j of W
        forward_solve(col);
        for (int i = 0; i < n; ++i) C.at(i, j) = col[i];
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const double v = 0.5 * (C.at(i, j) + C.at(j, i));
            C.at(i, j) = C.at(j, i) = v;
        }
    }

    std::vector<double> d, e;
    tridiagonalize(C, d, e);
    ql_implicit(d, e, C);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&d](int a, int b) { return d[a] < d[b]; });

    EigenPairs out;
    out.values.resize(k);
    out.vectors = DenseMatrix(n, k);
    for (int kk = 0; kk < k; ++kk) {
        const int src = order[kk];
        out.values[kk] = d[src];
        for (int i = 0; i < n; ++i) col[i] = C.at(i, src);
        backward_solve_t(col); // pencil eigenvector x = L⁻ᵀ q

        double xBx = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += B.at(i, j) * col[j];
            xBx += col[i] * s;
        }
        const double scale = 1.0 / std::sqrt(std::max(xBx, 1e-300));

        // fix the sign so repeated runs agree: largest-magnitude entry positive
        int arg = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
        const double sign = (col[arg] < 0.0) ? -1.0 : 1.0;

        for (int i = 0; i < n; ++i) out.vectors.at(i, kk) = col[i] * scale * sign;
    }
    return out;
}

} // namespace cemperf
