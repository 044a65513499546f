#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fae/linalg.hpp"
#include "fae/quadrature.hpp"

namespace fae {

enum class BasisKind { Bspline, Fourier };

/// A family of M basis functions evaluable anywhere on a closed domain.
///
/// B-spline systems use equally spaced interior knots with boundary knots
/// repeated `order` times, so the system is fully determined by
/// (num_basis, order, domain). Fourier systems are the constant plus the
/// sin/cos ladder on the domain-normalized argument.
struct BasisSystem {
    BasisKind kind = BasisKind::Bspline;
    double t_min = 0.0;
    double t_max = 1.0;
    int num_basis = 0;       // M
    int order = 4;           // B-spline only; 4 = cubic
    std::vector<double> knots;  // full clamped knot vector, B-spline only
};

inline BasisSystem make_bspline_basis(double t_min, double t_max, int num_basis, int order = 4) {
    if (!(t_min < t_max)) throw std::invalid_argument("basis: domain must satisfy t_min < t_max");
    if (order < 1) throw std::invalid_argument("basis: order must be positive");
    if (num_basis < order)
        throw std::invalid_argument("basis: B-spline needs num_basis >= order");
    BasisSystem b;
    b.kind = BasisKind::Bspline;
    b.t_min = t_min;
    b.t_max = t_max;
    b.num_basis = num_basis;
    b.order = order;
    const int interior = num_basis - order;
    b.knots.reserve(static_cast<std::size_t>(num_basis + order));
    for (int i = 0; i < order; ++i) b.knots.push_back(t_min);
    for (int i = 1; i <= interior; ++i)
        b.knots.push_back(t_min + (t_max - t_min) * i / (interior + 1));
    for (int i = 0; i < order; ++i) b.knots.push_back(t_max);
    return b;
}

inline BasisSystem make_fourier_basis(double t_min, double t_max, int num_basis) {
    if (!(t_min < t_max)) throw std::invalid_argument("basis: domain must satisfy t_min < t_max");
    if (num_basis < 1) throw std::invalid_argument("basis: Fourier needs num_basis >= 1");
    BasisSystem b;
    b.kind = BasisKind::Fourier;
    b.t_min = t_min;
    b.t_max = t_max;
    b.num_basis = num_basis;
    b.order = 0;
    return b;
}

namespace detail {

inline void check_in_domain(const BasisSystem& basis, double t) {
    if (!(t >= basis.t_min && t <= basis.t_max))
        throw std::domain_error("basis: t = " + std::to_string(t) + " outside domain [" +
                                std::to_string(basis.t_min) + ", " + std::to_string(basis.t_max) + "]");
}

// Knot span index s with knots[s] <= t < knots[s+1]; the right boundary
// falls into the last span so the final basis function is 1 at t_max.
inline std::size_t find_span(const BasisSystem& basis, double t) {
    const std::size_t m = static_cast<std::size_t>(basis.num_basis);
    if (t >= basis.t_max) return m - 1;
    const auto it = std::upper_bound(basis.knots.begin(), basis.knots.end(), t);
    std::size_t s = static_cast<std::size_t>(it - basis.knots.begin()) - 1;
    const std::size_t lo = static_cast<std::size_t>(basis.order) - 1;
    return std::clamp(s, lo, m - 1);
}

// Nonzero B-spline basis values at t for the given span (the usual
// triangular recurrence; only `order` entries are nonzero).
inline void bspline_nonzero(const BasisSystem& basis, double t, std::size_t span, double* out) {
    const int p = basis.order;
    const std::vector<double>& u = basis.knots;
    std::vector<double> left(static_cast<std::size_t>(p), 0.0);
    std::vector<double> right(static_cast<std::size_t>(p), 0.0);
    out[0] = 1.0;
    for (int j = 1; j < p; ++j) {
        left[j] = t - u[span + 1 - j];
        right[j] = u[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

}  // namespace detail

/// Evaluates all M basis functions at t. Throws std::domain_error for t
/// outside the domain (no extrapolation).
inline Vector evaluate(const BasisSystem& basis, double t) {
    detail::check_in_domain(basis, t);
    Vector phi(static_cast<std::size_t>(basis.num_basis), 0.0);
    if (basis.kind == BasisKind::Bspline) {
        const std::size_t span = detail::find_span(basis, t);
        std::vector<double> n(static_cast<std::size_t>(basis.order));
        detail::bspline_nonzero(basis, t, span, n.data());
        const std::size_t first = span + 1 - static_cast<std::size_t>(basis.order);
        for (int r = 0; r < basis.order; ++r) phi[first + static_cast<std::size_t>(r)] = n[static_cast<std::size_t>(r)];
    } else {
        static const double two_pi = 8.0 * std::atan(1.0);
        const double scaled = (t - basis.t_min) / (basis.t_max - basis.t_min);
        phi[0] = 1.0;
        for (int j = 1; j < basis.num_basis; ++j) {
            const int k = (j + 1) / 2;
            const double phase = two_pi * k * scaled;
            phi[static_cast<std::size_t>(j)] = (j % 2 == 1) ? std::sin(phase) : std::cos(phase);
        }
    }
    return phi;
}

/// Row j holds the basis values at times[j]. Times must be strictly
/// increasing and inside the domain.
inline Matrix design_matrix(const BasisSystem& basis, const Vector& times) {
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("design_matrix: times must be strictly increasing");
    Matrix d(times.size(), static_cast<std::size_t>(basis.num_basis));
    for (std::size_t j = 0; j < times.size(); ++j) {
        const Vector phi = evaluate(basis, times[j]);
        std::copy(phi.begin(), phi.end(), d.row(j));
    }
    return d;
}

/// Gram matrix G_mn ~ int phi_m phi_n dt by trapezoidal quadrature on a
/// uniform grid of `resolution` points. Symmetric positive semidefinite.
inline Matrix gram_matrix(const BasisSystem& basis, int resolution) {
    if (resolution < 2) throw std::invalid_argument("gram_matrix: resolution must be >= 2");
    const std::size_t m = static_cast<std::size_t>(basis.num_basis);
    Vector grid(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i)
        grid[static_cast<std::size_t>(i)] =
            basis.t_min + (basis.t_max - basis.t_min) * i / (resolution - 1);
    const QuadratureWeights quad = trapezoid_weights(grid);

    Matrix g(m, m, 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Vector phi = evaluate(basis, grid[j]);
        const double w = quad.weights[j];
        for (std::size_t r = 0; r < m; ++r) {
            if (phi[r] == 0.0) continue;
            const double wr = w * phi[r];
            for (std::size_t c = r; c < m; ++c) g(r, c) += wr * phi[c];
        }
    }
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < r; ++c) g(r, c) = g(c, r);
    return g;
}

}  // namespace fae
