#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fae {

using Vector = std::vector<double>;

/// Dense row-major matrix sized for the small systems this library deals
/// with (Gram matrices, layer weights). Not a BLAS replacement.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    const std::vector<double>& storage() const { return data_; }
    std::vector<double>& storage() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

/// y = A^T x without forming the transpose.
inline Vector matvec_t(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
    }
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* br = b.row(k);
            double* cr = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) cr[j] += aik * br[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

struct SymmetricEigen {
    Vector values;   // descending
    Matrix vectors;  // columns aligned with values
};

/// Cyclic Jacobi eigensolver for symmetric matrices. The input is
/// symmetrized first; convergence to ~1e-15 off-diagonal mass.
inline SymmetricEigen jacobi_eigensolve(Matrix a, int max_sweeps = 64) {
    if (a.rows() != a.cols()) throw std::invalid_argument("jacobi_eigensolve: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double avg = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = a(j, i) = avg;
        }

    Matrix v = Matrix::identity(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    if (scale == 0.0) scale = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - s * akq;
                    a(k, q) = a(q, k) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t best = i;
        for (std::size_t j = i + 1; j < n; ++j)
            if (a(order[j], order[j]) > a(order[best], order[best])) best = j;
        std::swap(order[i], order[best]);
    }

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Throws std::runtime_error when a pivot collapses (singular or
/// indefinite input).
inline Matrix cholesky_factor(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_factor: matrix must be square");
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
    const double tol = 1e-13 * std::max(max_diag, 1e-300);

    Matrix l(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > tol)) throw std::runtime_error("cholesky_factor: matrix is singular or not positive definite");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

/// Solves L L^T x = b given the lower factor L.
inline Vector cholesky_solve(const Matrix& lower, Vector b) {
    const std::size_t n = lower.rows();
    if (b.size() != n) throw std::invalid_argument("cholesky_solve: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * b[k];
        b[i] = s / lower(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * b[k];
        b[ii] = s / lower(ii, ii);
    }
    return b;
}

/// 64-bit seed mixer (splitmix64 finalizer) used to derive independent
/// deterministic RNG streams from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace fae
