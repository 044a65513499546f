#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fae/basis.hpp"
#include "fae/dataset.hpp"
#include "fae/linalg.hpp"

namespace fae {

/// Fitted functional principal component model. Eigenfunctions are stored
/// as basis-coefficient columns, orthonormal in the L2 metric induced by
/// the Gram matrix; eigenvalues are sorted descending.
struct FpcaModel {
    BasisSystem basis;
    Vector mean_coeffs;    // M
    Matrix eigen_coeffs;   // M x K, column k = coefficients of eigenfunction k
    Vector eigenvalues;    // K, nonincreasing, nonnegative
    Matrix gram;           // cached M x M Gram matrix
    double smoothing_ridge = 1e-9;
    int gram_resolution = 20001;

    int num_components() const { return static_cast<int>(eigenvalues.size()); }
};

/// Per-sample least-squares basis coefficients, optionally ridge
/// regularized: min_c sum_j (X(t_j) - Phi c)^2 + ridge ||c||^2.
/// Rank-deficient designs with ridge = 0 raise a singularity error.
inline Matrix smooth_to_basis(const Dataset& samples, const BasisSystem& basis, double ridge) {
    if (ridge < 0.0) throw std::invalid_argument("smooth_to_basis: ridge must be nonnegative");
    const std::size_t m = static_cast<std::size_t>(basis.num_basis);
    Matrix coeffs(samples.size(), m);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Matrix phi = design_matrix(basis, samples[i].times);
        Matrix normal(m, m, 0.0);
        for (std::size_t j = 0; j < phi.rows(); ++j) {
            const double* row = phi.row(j);
            for (std::size_t r = 0; r < m; ++r) {
                if (row[r] == 0.0) continue;
                for (std::size_t c = r; c < m; ++c) normal(r, c) += row[r] * row[c];
            }
        }
        for (std::size_t r = 0; r < m; ++r) {
            normal(r, r) += ridge;
            for (std::size_t c = 0; c < r; ++c) normal(r, c) = normal(c, r);
        }
        const Vector rhs = matvec_t(phi, samples[i].values);
        Vector c;
        try {
            c = cholesky_solve(cholesky_factor(normal), rhs);
        } catch (const std::runtime_error&) {
            throw std::runtime_error("smooth_to_basis: singular design for sample " +
                                     std::to_string(i) + " (increase ridge or basis resolution)");
        }
        std::copy(c.begin(), c.end(), coeffs.row(i));
    }
    return coeffs;
}

namespace detail {

// Symmetric square root of the Gram matrix and its inverse, with
// eigenvalue clamping at 1e-12 for near-singular dense spline bases.
struct GramRoots {
    Matrix half;
    Matrix inv_half;
};

inline GramRoots gram_roots(const Matrix& gram) {
    const SymmetricEigen eig = jacobi_eigensolve(gram);
    const std::size_t m = gram.rows();
    double top = 1.0;
    for (double v : eig.values) top = std::max(top, std::abs(v));
    for (double v : eig.values)
        if (v < -1e-10 * top)
            throw std::runtime_error("fpca: Gram matrix is not positive semidefinite");
    GramRoots roots;
    roots.half = Matrix(m, m, 0.0);
    roots.inv_half = Matrix(m, m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double lam = std::max(eig.values[k], 1e-12);
        const double sq = std::sqrt(lam);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double outer = eig.vectors(i, k) * eig.vectors(j, k);
                roots.half(i, j) += sq * outer;
                roots.inv_half(i, j) += outer / sq;
            }
        }
    }
    return roots;
}

}  // namespace detail

/// Eigendecomposition of the coefficient covariance in the basis metric:
/// solve the symmetric problem for G^(1/2) S G^(1/2) and map eigenvectors
/// back through G^(-1/2). Covariance uses the (N-1) denominator.
inline FpcaModel fpca_fit(const Matrix& coeff_matrix, const BasisSystem& basis, int num_components,
                          double smoothing_ridge = 1e-9, int gram_resolution = 20001) {
    const std::size_t n = coeff_matrix.rows();
    const std::size_t m = coeff_matrix.cols();
    if (n < 2) throw std::invalid_argument("fpca_fit: need at least 2 samples");
    if (m != static_cast<std::size_t>(basis.num_basis))
        throw std::invalid_argument("fpca_fit: coefficient width != basis size");
    if (num_components < 1 || num_components > static_cast<int>(m))
        throw std::invalid_argument("fpca_fit: num_components must be in [1, M]");

    FpcaModel model;
    model.basis = basis;
    model.smoothing_ridge = smoothing_ridge;
    model.gram_resolution = gram_resolution;
    model.gram = gram_matrix(basis, gram_resolution);

    model.mean_coeffs.assign(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) model.mean_coeffs[j] += coeff_matrix(i, j);
    for (double& v : model.mean_coeffs) v /= static_cast<double>(n);

    Matrix centered(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) centered(i, j) = coeff_matrix(i, j) - model.mean_coeffs[j];

    Matrix cov(m, m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = centered.row(i);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = r; c < m; ++c) cov(r, c) += row[r] * row[c];
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = r; c < m; ++c) {
            cov(r, c) /= denom;
            cov(c, r) = cov(r, c);
        }

    const detail::GramRoots roots = detail::gram_roots(model.gram);
    const Matrix transformed = matmul(roots.half, matmul(cov, roots.half));
    const SymmetricEigen eig = jacobi_eigensolve(transformed);

    const std::size_t k = static_cast<std::size_t>(num_components);
    model.eigenvalues.resize(k);
    model.eigen_coeffs = Matrix(m, k);
    for (std::size_t c = 0; c < k; ++c) {
        model.eigenvalues[c] = std::max(eig.values[c], 0.0);
        Vector u(m);
        for (std::size_t i = 0; i < m; ++i) u[i] = eig.vectors(i, c);
        const Vector coeff = matvec(roots.inv_half, u);
        for (std::size_t i = 0; i < m; ++i) model.eigen_coeffs(i, c) = coeff[i];
    }
    return model;
}

/// Smooth-then-fit convenience for raw discrete samples.
inline FpcaModel fpca_fit_dataset(const Dataset& samples, const BasisSystem& basis,
                                  int num_components, double smoothing_ridge = 1e-9,
                                  int gram_resolution = 20001) {
    const Matrix coeffs = smooth_to_basis(samples, basis, smoothing_ridge);
    return fpca_fit(coeffs, basis, num_components, smoothing_ridge, gram_resolution);
}

/// FPC scores of one sample, computed in coefficient space:
/// xi_k = (c - mean)^T G E_k.
inline Vector fpca_scores(const FpcaModel& model, const FunctionalSample& sample) {
    const Matrix coeff = smooth_to_basis({sample}, model.basis, model.smoothing_ridge);
    Vector centered(model.mean_coeffs.size());
    for (std::size_t j = 0; j < centered.size(); ++j)
        centered[j] = coeff(0, j) - model.mean_coeffs[j];
    const Vector gc = matvec(model.gram, centered);
    return matvec_t(model.eigen_coeffs, gc);
}

/// Mean curve plus score-weighted eigenfunctions at eval_times. Accepts
/// up to num_components scores; missing trailing scores are treated as 0.
inline Vector fpca_reconstruct(const FpcaModel& model, const Vector& scores,
                               const Vector& eval_times) {
    if (scores.size() > static_cast<std::size_t>(model.num_components()))
        throw std::invalid_argument("fpca_reconstruct: more scores than components");
    Vector coeff = model.mean_coeffs;
    for (std::size_t k = 0; k < scores.size(); ++k)
        for (std::size_t j = 0; j < coeff.size(); ++j)
            coeff[j] += scores[k] * model.eigen_coeffs(j, k);
    Vector out(eval_times.size());
    for (std::size_t j = 0; j < eval_times.size(); ++j) {
        const Vector phi = evaluate(model.basis, eval_times[j]);
        out[j] = dot(phi, coeff);
    }
    return out;
}

}  // namespace fae
