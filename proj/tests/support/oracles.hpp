#pragma once

// Test-side reference implementations, deliberately written with different
// algorithms than the library (cyclic Jacobi instead of tridiagonal QL,
// partial-pivot Gauss instead of Cholesky) so the two can cross-check each
// other.

#include "cemperf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracles {

/// Dense solve by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(cemperf::DenseMatrix a,
                                       std::vector<double> b) {
    const int n = a.n_rows;
    if (a.n_cols != n || int(b.size()) != n)
        throw std::invalid_argument("gauss_solve: shape mismatch");
    for (int k = 0; k < n; ++k) {
        int pivot = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a.at(i, k)) > std::abs(a.at(pivot, k)))
                pivot = i;
        if (a.at(pivot, k) == 0.0)
            throw std::runtime_error("gauss_solve: singular matrix");
        if (pivot != k) {
            for (int j = 0; j < n; ++j)
                std::swap(a.at(k, j), a.at(pivot, j));
            std::swap(b[k], b[pivot]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double factor = a.at(i, k) / a.at(k, k);
            for (int j = k; j < n; ++j)
                a.at(i, j) -= factor * a.at(k, j);
            b[i] -= factor * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double sum = b[i];
        for (int j = i + 1; j < n; ++j)
            sum -= a.at(i, j) * x[j];
        x[i] = sum / a.at(i, i);
    }
    return x;
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations. Returns the
/// eigenvalues ascending; columns of `vectors` are the matching eigenvectors.
struct JacobiResult {
    std::vector<double> values;
    cemperf::DenseMatrix vectors;
};

inline JacobiResult jacobi_eig(cemperf::DenseMatrix a) {
    const int n = a.n_rows;
    cemperf::DenseMatrix v = cemperf::DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q)
                off += a.at(p, q) * a.at(p, q);
        if (off < 1e-30)
            break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300)
                    continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p);
                    const double vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    // sort ascending by eigenvalue, reordering columns alongside
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return a.at(x, x) < a.at(y, y); });
    JacobiResult result;
    result.values.resize(n);
    result.vectors = cemperf::DenseMatrix(n, n);
    for (int j = 0; j < n; ++j) {
        result.values[j] = a.at(order[j], order[j]);
        for (int i = 0; i < n; ++i)
            result.vectors.at(i, j) = v.at(i, order[j]);
    }
    return result;
}

/// Generalized eigenvalues of the pencil (A, B) with B SPD, via the inverse
/// of B computed by Gauss and a Jacobi decomposition of the symmetrized
/// product L⁻¹AL⁻ᵀ obtained from B = LLᵀ (but with the factor built by the
/// oracle, not the library).
inline std::vector<double> generalized_eigenvalues(const cemperf::DenseMatrix& a,
                                                   const cemperf::DenseMatrix& b) {
    const int n = a.n_rows;
    // oracle Cholesky of B (straightforward textbook loop)
    cemperf::DenseMatrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = b.at(i, j);
            for (int k = 0; k < j; ++k)
                sum -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (sum <= 0.0)
                    throw std::runtime_error("oracle: B not SPD");
                l.at(i, i) = std::sqrt(sum);
            } else {
                l.at(i, j) = sum / l.at(j, j);
            }
        }
    }
    // W = L⁻¹ A  (forward substitution per column)
    cemperf::DenseMatrix w(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double sum = a.at(i, j);
            for (int k = 0; k < i; ++k)
                sum -= l.at(i, k) * w.at(k, j);
            w.at(i, j) = sum / l.at(i, i);
        }
    }
    // C = L⁻¹ Wᵀ = L⁻¹ A L⁻ᵀ
    cemperf::DenseMatrix c(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double sum = w.at(j, i);
            for (int k = 0; k < i; ++k)
                sum -= l.at(i, k) * c.at(k, j);
            c.at(i, j) = sum / l.at(i, i);
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double mean = 0.5 * (c.at(i, j) + c.at(j, i));
            c.at(i, j) = mean;
            c.at(j, i) = mean;
        }
    return jacobi_eig(c).values;
}

/// Deterministic uniform doubles in [lo, hi).
struct Rng {
    std::mt19937 engine;
    explicit Rng(unsigned seed) : engine(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine);
    }
    std::vector<double> vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v)
            x = uniform(lo, hi);
        return v;
    }
};

} // namespace oracles
