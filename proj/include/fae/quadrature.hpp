#pragma once

#include <cmath>
#include <stdexcept>

#include "fae/linalg.hpp"

namespace fae {

/// Weights turning sums over observed time points into integral
/// approximations: sum_j w_j f(t_j) ~ int f. Total mass equals the span
/// of the grid and every weight is positive.
struct QuadratureWeights {
    Vector times;
    Vector weights;
};

/// Composite trapezoidal weights for an arbitrary strictly increasing
/// grid. Exact for affine integrands.
inline QuadratureWeights trapezoid_weights(const Vector& times) {
    const std::size_t j = times.size();
    if (j < 2) throw std::invalid_argument("trapezoid_weights: need at least 2 time points");
    for (std::size_t i = 0; i + 1 < j; ++i) {
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("trapezoid_weights: times must be strictly increasing");
    }
    QuadratureWeights q;
    q.times = times;
    q.weights.resize(j);
    q.weights[0] = 0.5 * (times[1] - times[0]);
    q.weights[j - 1] = 0.5 * (times[j - 1] - times[j - 2]);
    for (std::size_t i = 1; i + 1 < j; ++i) q.weights[i] = 0.5 * (times[i + 1] - times[i - 1]);
    return q;
}

}  // namespace fae
