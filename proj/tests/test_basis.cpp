#include <doctest.h>

#include <random>

#include "fae/basis.hpp"
#include "test_util.hpp"

using namespace fae;

TEST_CASE("bspline construction validates its invariants") {
    CHECK_THROWS_AS(make_bspline_basis(0.0, 1.0, 3, 4), std::invalid_argument);  // M < order
    CHECK_THROWS_AS(make_bspline_basis(1.0, 0.0, 8, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_fourier_basis(0.0, 1.0, 0), std::invalid_argument);

    const BasisSystem b = make_bspline_basis(0.0, 1.0, 8, 4);
    REQUIRE(b.knots.size() == 12);
    CHECK(b.knots.front() == 0.0);
    CHECK(b.knots.back() == 1.0);
    for (std::size_t i = 0; i + 1 < b.knots.size(); ++i) CHECK(b.knots[i] <= b.knots[i + 1]);
}

TEST_CASE("order-1 bsplines are interval indicators") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 2, 1);
    const Vector phi = evaluate(b, 0.25);
    CHECK(phi[0] == doctest::Approx(1.0));
    CHECK(phi[1] == doctest::Approx(0.0));
}

TEST_CASE("bspline partition of unity at 1000 random points") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 8, 4);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Vector phi = evaluate(b, unif(rng));
        double sum = 0.0;
        for (double v : phi) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("bspline local support: at most `order` nonzero values") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int order = 1; order <= 5; ++order) {
        const BasisSystem b = make_bspline_basis(0.0, 1.0, order + 4, order);
        for (int i = 0; i < 200; ++i) {
            const Vector phi = evaluate(b, unif(rng));
            int nonzero = 0;
            for (double v : phi) {
                CHECK(v >= 0.0);
                if (v != 0.0) ++nonzero;
            }
            CHECK(nonzero <= order);
        }
    }
}

TEST_CASE("bspline evaluation matches the naive Cox-de Boor recursion") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 5, 3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.001, 0.999);
    Vector points = {0.5};
    for (int i = 0; i < 50; ++i) points.push_back(unif(rng));
    for (double t : points) {
        const Vector phi = evaluate(b, t);
        for (std::size_t m = 0; m < 5; ++m) {
            const double expected = testutil::bspline_naive(b.knots, m, 3, t);
            CHECK(phi[m] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("right boundary uses the left-limit convention") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 8, 4);
    const Vector phi = evaluate(b, 1.0);
    CHECK(phi[7] == doctest::Approx(1.0));
    for (std::size_t m = 0; m + 1 < 8; ++m) CHECK(std::abs(phi[m]) < 1e-15);
}

TEST_CASE("evaluate rejects out-of-domain points") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 8, 4);
    CHECK_THROWS_AS(evaluate(b, -0.01), std::domain_error);
    CHECK_THROWS_AS(evaluate(b, 1.01), std::domain_error);
    const BasisSystem f = make_fourier_basis(0.0, 1.0, 3);
    CHECK_THROWS_AS(evaluate(f, 2.0), std::domain_error);
}

TEST_CASE("fourier ladder ordering and values") {
    const BasisSystem f = make_fourier_basis(0.0, 2.0, 5);
    const Vector phi = evaluate(f, 0.5);  // normalized t = 0.25
    CHECK(phi[0] == doctest::Approx(1.0));
    CHECK(phi[1] == doctest::Approx(1.0));          // sin(pi/2)
    CHECK(phi[2] == doctest::Approx(0.0).epsilon(1e-12));  // cos(pi/2)
    CHECK(phi[3] == doctest::Approx(0.0).epsilon(1e-12));  // sin(pi)
    CHECK(phi[4] == doctest::Approx(-1.0));         // cos(pi)
}

TEST_CASE("design_matrix rows equal pointwise evaluation") {
    const BasisSystem b = make_bspline_basis(0.0, 1.0, 6, 4);
    SUBCASE("single row") {
        const Matrix d = design_matrix(b, {0.37});
        const Vector phi = evaluate(b, 0.37);
        for (std::size_t m = 0; m < 6; ++m) CHECK(d(0, m) == phi[m]);
    }
    SUBCASE("order-1 rows are one-hot") {
        const BasisSystem ind = make_bspline_basis(0.0, 1.0, 4, 1);
        const Matrix d = design_matrix(ind, {0.1, 0.3, 0.6, 0.9});
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t m = 0; m < 4; ++m) CHECK(d(j, m) == (j == m ? 1.0 : 0.0));
    }
    SUBCASE("row sums are 1 for bsplines") {
        const Matrix d = design_matrix(b, testutil::uniform_grid(0.0, 1.0, 31));
        for (std::size_t j = 0; j < d.rows(); ++j) {
            double sum = 0.0;
            for (std::size_t m = 0; m < d.cols(); ++m) sum += d(j, m);
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
    SUBCASE("non-increasing times rejected") {
        CHECK_THROWS_AS(design_matrix(b, {0.5, 0.5}), std::invalid_argument);
        CHECK_THROWS_AS(design_matrix(b, {0.5, 0.4}), std::invalid_argument);
    }
}

namespace {

// Midpoint-rule Gram oracle at much finer resolution; an independent
// second-order quadrature route.
Matrix gram_midpoint_oracle(const BasisSystem& basis, int cells) {
    const std::size_t m = static_cast<std::size_t>(basis.num_basis);
    Matrix g(m, m, 0.0);
    const double h = (basis.t_max - basis.t_min) / cells;
    for (int c = 0; c < cells; ++c) {
        const double t = basis.t_min + (c + 0.5) * h;
        const Vector phi = evaluate(basis, t);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t s = 0; s < m; ++s) g(r, s) += h * phi[r] * phi[s];
    }
    return g;
}

}  // namespace

TEST_CASE("gram matrix properties and oracle agreement") {
    SUBCASE("fourier modes are orthogonal") {
        const BasisSystem f = make_fourier_basis(0.0, 1.0, 3);
        const Matrix g = gram_matrix(f, 4001);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                if (r != c) CHECK(std::abs(g(r, c)) < 1e-6);
        CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(g(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("order-1 uniform bsplines give diag(width)") {
        const BasisSystem ind = make_bspline_basis(0.0, 1.0, 4, 1);
        const Matrix g = gram_matrix(ind, 8001);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                if (r == c)
                    CHECK(g(r, c) == doctest::Approx(0.25).epsilon(1e-3));
                else
                    CHECK(std::abs(g(r, c)) < 1e-12);
            }
    }
    SUBCASE("cubic gram matches 10x midpoint oracle to 1e-6") {
        const BasisSystem b = make_bspline_basis(0.0, 1.0, 8, 4);
        const Matrix g = gram_matrix(b, 4001);
        const Matrix oracle = gram_midpoint_oracle(b, 40000);
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(g(r, c) - oracle(r, c)) < 1e-6);
    }
    SUBCASE("symmetric with no eigenvalue below -1e-10") {
        const BasisSystem b = make_bspline_basis(-1.0, 2.0, 9, 4);
        const Matrix g = gram_matrix(b, 2001);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c)
                CHECK(std::abs(g(r, c) - g(c, r)) < 1e-14);
        const SymmetricEigen eig = jacobi_eigensolve(g);
        for (double v : eig.values) CHECK(v > -1e-10);
    }
    SUBCASE("resolution below 2 rejected") {
        const BasisSystem b = make_bspline_basis(0.0, 1.0, 4, 2);
        CHECK_THROWS_AS(gram_matrix(b, 1), std::invalid_argument);
    }
}
