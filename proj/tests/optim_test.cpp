#include <cmath>

#include "doctest.h"

#include "donet/optim.hpp"

using namespace donet;

TEST_CASE("learning-rate schedule") {
    CHECK(lr_at(1, 1e-3) == 1e-3);
    CHECK(lr_at(499, 1e-3) == 1e-3);
    CHECK(lr_at(500, 1e-3) == doctest::Approx(0.95e-3).epsilon(1e-14));
    CHECK(lr_at(1000, 1e-3) == doctest::Approx(0.9025e-3).epsilon(1e-14));
    for (std::size_t t = 1; t < 3000; ++t) CHECK(lr_at(t + 1, 1.0) <= lr_at(t, 1.0));
}

TEST_CASE("GD scalar step") {
    Optimizer opt({OptimizerKind::GD, 0.1});
    std::vector<double> theta = {1.0};
    opt.step(theta, {2.0});
    CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("Adam: zero gradient leaves parameters unchanged") {
    Optimizer opt({OptimizerKind::Adam, 0.01});
    std::vector<double> theta = {1.0, -2.0};
    opt.step(theta, {0.0, 0.0});
    CHECK(theta[0] == 1.0);
    CHECK(theta[1] == -2.0);
}

TEST_CASE("Adam first step is a signed step of size ~alpha") {
    const double alpha = 0.01, g = 3.0;
    Optimizer opt({OptimizerKind::Adam, alpha});
    std::vector<double> theta = {0.0};
    opt.step(theta, {g});
    // t=1: m_hat = g, v_hat = g^2, update = -alpha * g/(|g| + eps)
    CHECK(theta[0] == doctest::Approx(-alpha * g / (std::abs(g) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("AdaGrad accumulator recursion") {
    const double alpha = 0.1;
    Optimizer opt({OptimizerKind::AdaGrad, alpha});
    std::vector<double> theta = {0.0};
    opt.step(theta, {2.0});
    const double after1 = -alpha * 2.0 / (std::sqrt(4.0) + 1e-8);
    CHECK(theta[0] == doctest::Approx(after1).epsilon(1e-12));
    opt.step(theta, {1.0});
    CHECK(theta[0] == doctest::Approx(after1 - alpha * 1.0 / (std::sqrt(5.0) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("all optimizers drive a convex quadratic toward its minimum") {
    // GD contracts monotonically at this step size; Adam and AdaGrad may
    // overshoot near the minimum, so only the endpoint is checked for them.
    for (OptimizerKind kind : {OptimizerKind::GD, OptimizerKind::Adam, OptimizerKind::AdaGrad}) {
        Optimizer opt({kind, 0.1});
        std::vector<double> theta = {2.0, -1.5};
        const double start = 0.5 * (theta[0] * theta[0] + theta[1] * theta[1]);
        double prev = start;
        for (int t = 0; t < 400; ++t) {
            opt.step(theta, theta); // grad of 0.5*||theta||^2 is theta
            const double loss = 0.5 * (theta[0] * theta[0] + theta[1] * theta[1]);
            if (kind == OptimizerKind::GD) CHECK(loss <= prev + 1e-15);
            prev = loss;
        }
        CHECK(prev < 0.05 * start);
    }
}

TEST_CASE("Adam steps are bounded by the learning rate") {
    Optimizer opt({OptimizerKind::Adam, 0.01});
    std::vector<double> theta = {0.0, 0.0, 0.0};
    const std::vector<std::vector<double>> grads = {
        {5.0, -0.01, 100.0}, {-3.0, 0.02, 80.0}, {1.0, -0.05, -200.0}};
    std::vector<double> before = theta;
    for (const auto& g : grads) {
        before = theta;
        opt.step(theta, g);
        for (std::size_t i = 0; i < theta.size(); ++i)
            CHECK(std::abs(theta[i] - before[i]) <= lr_at(opt.t(), 0.01) * (1.0 + 1e-6));
    }
}

TEST_CASE("non-finite gradients are rejected") {
    Optimizer opt({OptimizerKind::GD, 0.1});
    std::vector<double> theta = {1.0};
    CHECK_THROWS(opt.step(theta, {std::nan("")}));
}

TEST_CASE("reweight_gradient") {
    const std::vector<std::vector<double>> mode_grads = {{1.0, 2.0}, {3.0, -1.0}, {0.5, 0.5}};
    const std::vector<double> sigmas = {2.0, 1.0, 0.5};
    const std::size_t n = 4, m = 5;

    SUBCASE("e=0 recovers the standard weights and unit lr scale") {
        const auto [g, scale] = reweight_gradient(mode_grads, sigmas, 0.0, n, m);
        CHECK(scale == 1.0);
        for (std::size_t k = 0; k < 2; ++k) {
            double expect = 0.0;
            for (std::size_t i = 0; i < 3; ++i)
                expect += sigmas[i] * sigmas[i] / 20.0 * mode_grads[i][k];
            CHECK(g[k] == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    SUBCASE("e=-1 gives the unweighted mean gradient") {
        const auto [g, scale] = reweight_gradient(mode_grads, sigmas, -1.0, n, m);
        CHECK(scale == doctest::Approx(sigmas[0] * sigmas[0]).epsilon(1e-14));
        for (std::size_t k = 0; k < 2; ++k) {
            double expect = 0.0;
            for (std::size_t i = 0; i < 3; ++i) expect += mode_grads[i][k] / 20.0;
            CHECK(g[k] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("leading-mode contribution is invariant in e") {
        for (double e : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            const auto [g, scale] = reweight_gradient({mode_grads[0]}, {sigmas[0]}, e, n, m);
            CHECK(scale * std::pow(sigmas[0], 2.0 + 2.0 * e) ==
                  doctest::Approx(sigmas[0] * sigmas[0]).epsilon(1e-12));
        }
    }
}
