#include <doctest.h>

#include <limits>
#include <random>

#include "fae/nncore.hpp"
#include "test_util.hpp"

using namespace fae;

namespace {

LayerStack random_stack(std::mt19937_64& rng, const std::vector<std::size_t>& sizes,
                        Activation act, bool bias) {
    LayerStack net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        net.push_back(make_dense(sizes[l], sizes[l + 1], act, bias, rng, 0.5));
    return net;
}

Vector random_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> gauss(0.0, sd);
    Vector v(n);
    for (double& x : v) x = gauss(rng);
    return v;
}

}  // namespace

TEST_CASE("dense_forward basics") {
    SUBCASE("identity weight matrix passes input through") {
        DenseLayer l;
        l.weight = Matrix::identity(2);
        l.has_bias = false;
        l.activation = Activation::Identity;
        const Vector out = dense_forward(l, {3.0, -1.0});
        CHECK(out[0] == 3.0);
        CHECK(out[1] == -1.0);
    }
    SUBCASE("zero weights under sigmoid give 0.5") {
        DenseLayer l;
        l.weight = Matrix(3, 2, 0.0);
        l.has_bias = false;
        l.activation = Activation::Sigmoid;
        for (double v : dense_forward(l, {7.0, -2.0})) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("softplus layer matches a scalar-loop oracle") {
        std::mt19937_64 rng(21);
        DenseLayer l = make_dense(5, 4, Activation::Softplus, true, rng, 1.0);
        for (double& b : l.bias) b = 0.3;
        const Vector x = random_vector(rng, 5);
        const Vector out = dense_forward(l, x);
        for (std::size_t i = 0; i < 4; ++i) {
            double z = l.bias[i];
            for (std::size_t j = 0; j < 5; ++j) z += l.weight(i, j) * x[j];
            const double expected = std::log(1.0 + std::exp(z));  // naive formula, safe for small z
            CHECK(out[i] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("dimension mismatch rejected") {
        DenseLayer l;
        l.weight = Matrix(2, 3, 0.1);
        l.has_bias = false;
        CHECK_THROWS_AS(dense_forward(l, {1.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("backward of a single identity layer equals the least-squares gradient") {
    std::mt19937_64 rng(22);
    LayerStack net = random_stack(rng, {4, 3}, Activation::Identity, false);
    const Vector x = random_vector(rng, 4);
    const Vector y = random_vector(rng, 3);
    ChainTape tape;
    const Vector out = chain_forward(net, x, &tape);
    Vector dout(3);
    for (std::size_t i = 0; i < 3; ++i) dout[i] = out[i] - y[i];  // d(1/2 ||Wx-y||^2)/dout
    const ChainGrads grads = chain_backward(net, tape, dout);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(grads.layers[0].weight(i, j) == doctest::Approx((out[i] - y[i]) * x[j]));
}

TEST_CASE("gradients match central finite differences on 100 random configurations") {
    std::mt19937_64 rng(23);
    const Activation acts[] = {Activation::Identity, Activation::Sigmoid, Activation::Softplus};
    for (int rep = 0; rep < 100; ++rep) {
        std::uniform_int_distribution<std::size_t> dim(1, 5);
        std::uniform_int_distribution<int> depth(1, 3);
        std::vector<std::size_t> sizes{dim(rng)};
        const int layers = depth(rng);
        for (int l = 0; l < layers; ++l) sizes.push_back(dim(rng));
        LayerStack net = random_stack(rng, sizes, acts[rep % 3], rep % 2 == 0);
        const Vector x = random_vector(rng, sizes.front());
        const Vector y = random_vector(rng, sizes.back());

        ChainTape tape;
        const Vector out = chain_forward(net, x, &tape);
        Vector dout(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) dout[i] = out[i] - y[i];
        const Vector analytic = flatten_grads(chain_backward(net, tape, dout));

        auto loss = [&]() {
            const Vector o = chain_forward(net, x);
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += 0.5 * (o[i] - y[i]) * (o[i] - y[i]);
            return s;
        };
        const Vector fd = testutil::fd_gradient(loss, param_pointers(net));
        CHECK(testutil::max_rel_err(analytic, fd) < 1e-5);
    }
}

TEST_CASE("parameters off the forward path get exactly zero gradient") {
    std::mt19937_64 rng(24);
    LayerStack net = random_stack(rng, {3, 4, 2}, Activation::Sigmoid, true);
    // cut hidden unit 1 out of the second layer
    for (std::size_t i = 0; i < 2; ++i) net[1].weight(i, 1) = 0.0;
    ChainTape tape;
    const Vector out = chain_forward(net, {0.2, -0.4, 0.9}, &tape);
    const ChainGrads grads = chain_backward(net, tape, {1.0, -2.0});
    for (std::size_t j = 0; j < 3; ++j) CHECK(grads.layers[0].weight(1, j) == 0.0);
    CHECK(grads.layers[0].bias[1] == 0.0);
}

TEST_CASE("backward without a recorded forward is a state error") {
    std::mt19937_64 rng(25);
    LayerStack net = random_stack(rng, {2, 2}, Activation::Identity, false);
    ChainTape tape;
    ChainGrads acc = make_zero_grads(net);
    CHECK_THROWS_AS(chain_backward_accumulate(net, tape, {1.0, 1.0}, acc), std::logic_error);
}

TEST_CASE("optimizer reference steps") {
    SUBCASE("plain sgd") {
        Vector p{1.0}, g{2.0}, v{0.0};
        sgd_step(p, g, v, 0.1);
        CHECK(p[0] == doctest::Approx(0.8));
    }
    SUBCASE("adam first-step magnitude is ~lr regardless of gradient size") {
        for (double g0 : {1e-4, 1.0, 1e4}) {
            Vector p{0.0}, g{g0}, m{0.0}, v{0.0};
            adam_step(p, g, m, v, 1, 0.01);
            CHECK(std::abs(p[0]) == doctest::Approx(0.01).epsilon(1e-3));
        }
    }
    SUBCASE("sgd on a quadratic bowl converges geometrically") {
        double theta = 0.0, velocity = 0.0;
        for (int i = 0; i < 200; ++i) {
            Vector p{theta}, g{2.0 * (theta - 3.0)}, v{velocity};
            sgd_step(p, g, v, 0.1);
            theta = p[0];
            velocity = v[0];
        }
        CHECK(std::abs(theta - 3.0) < 1e-6);
    }
}

TEST_CASE("activations are stable out to |z| = 500") {
    for (double z : {-500.0, -50.0, 0.0, 50.0, 500.0}) {
        CHECK(std::isfinite(activate(Activation::Sigmoid, z)));
        CHECK(std::isfinite(activate(Activation::Softplus, z)));
        CHECK(std::isfinite(activate_derivative(Activation::Softplus, z)));
    }
    CHECK(activate(Activation::Softplus, 500.0) == doctest::Approx(500.0));
    CHECK(activate(Activation::Softplus, -500.0) == doctest::Approx(0.0));
    CHECK(activate(Activation::Sigmoid, 500.0) == doctest::Approx(1.0));
    CHECK(activate(Activation::Sigmoid, -500.0) == doctest::Approx(0.0));
}

TEST_CASE("identical seeds give bit-identical parameter trajectories") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        LayerStack net = random_stack(rng, {3, 4, 3}, Activation::Sigmoid, true);
        std::vector<double*> params = param_pointers(net);
        Optimizer opt(OptimizerConfig{}, params.size());
        const Vector x{0.1, 0.2, 0.3};
        const Vector y{1.0, 0.0, -1.0};
        for (int step = 0; step < 5; ++step) {
            ChainTape tape;
            const Vector out = chain_forward(net, x, &tape);
            Vector dout(3);
            for (std::size_t i = 0; i < 3; ++i) dout[i] = out[i] - y[i];
            opt.step(params, flatten_grads(chain_backward(net, tape, dout)), step);
        }
        Vector flat;
        for (double* p : params) flat.push_back(*p);
        return flat;
    };
    const Vector a = run(99);
    const Vector b = run(99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("non-finite gradients raise a training failure carrying the epoch") {
    Optimizer opt(OptimizerConfig{}, 2);
    double a = 0.0, b = 0.0;
    std::vector<double*> params{&a, &b};
    try {
        opt.step(params, {1.0, std::numeric_limits<double>::infinity()}, 17);
        FAIL("expected TrainingFailure");
    } catch (const TrainingFailure& e) {
        CHECK(e.epoch() == 17);
    }
}
