#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "donet/mlp.hpp"
#include "donet/rng.hpp"

using namespace donet;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

// scalar objective <d_out, forward(p, x)> for finite differencing
double objective(const MlpParams& p, const Matrix& x, const Matrix& d_out) {
    const Matrix y = forward(p, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += d_out.data()[i] * y.data()[i];
    return s;
}

void gradient_check(const MlpShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    MlpParams p = init_mlp(shape, rng);
    const Matrix x = random_matrix(shape.input_dim, 4, rng);
    const Matrix d_out = random_matrix(shape.output_dim, 4, rng);
    ForwardCache cache;
    forward(p, x, &cache);
    const MlpGrads grads = backward(p, cache, d_out);
    std::vector<double> flat = flatten(p.layers);
    const std::vector<double> gflat = flatten(grads);
    const double h = 1e-5;
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double save = flat[k];
        flat[k] = save + h;
        assign_from_flat(p.layers, flat);
        const double up = objective(p, x, d_out);
        flat[k] = save - h;
        assign_from_flat(p.layers, flat);
        const double dn = objective(p, x, d_out);
        flat[k] = save;
        const double fd = (up - dn) / (2.0 * h);
        CHECK(std::abs(fd - gflat[k]) <= 1e-6 * std::max({1.0, std::abs(fd), std::abs(gflat[k])}));
    }
    assign_from_flat(p.layers, flat);
}

} // namespace

TEST_CASE("gelu reference values") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(10.0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(gelu(1.0) == doctest::Approx(0.8413447461).epsilon(1e-9));
    // derivative agrees with central differences
    for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
        const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
        CHECK(gelu_prime(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("init is deterministic, bounded, with Glorot variance") {
    Rng r1(5), r2(5);
    const MlpShape shape{100, 100, 1, 1};
    const MlpParams a = init_mlp(shape, r1);
    const MlpParams b = init_mlp(shape, r2);
    CHECK(flatten(a.layers) == flatten(b.layers));
    const double bound = std::sqrt(6.0 / 200.0);
    double sq = 0.0;
    const Matrix& w = a.layers[0].w;
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(std::abs(w.data()[i]) <= bound);
        sq += w.data()[i] * w.data()[i];
    }
    const double var = sq / double(w.size());
    CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.05));
    for (double bias : a.layers[0].b) CHECK(bias == 0.0);
    CHECK(a.layers.back().b.empty()); // output layer carries no bias
}

TEST_CASE("forward on a hand-built one-hidden-layer net") {
    MlpParams p;
    p.shape = {1, 1, 1, 1};
    p.layers.resize(2);
    p.layers[0].w = Matrix(1, 1);
    p.layers[0].w(0, 0) = 1.0;
    p.layers[0].b = {0.0};
    p.layers[1].w = Matrix(1, 1);
    p.layers[1].w(0, 0) = 2.0;
    Matrix x(1, 1);
    x(0, 0) = 1.0;
    CHECK(forward(p, x)(0, 0) == doctest::Approx(1.6826894923).epsilon(1e-9));
}

TEST_CASE("zero weights give zero outputs") {
    Rng rng(6);
    MlpParams p = init_mlp({3, 4, 2, 2}, rng);
    std::vector<double> flat(flatten(p.layers).size(), 0.0);
    assign_from_flat(p.layers, flat);
    const Matrix y = forward(p, random_matrix(3, 5, rng));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("batched forward equals column-wise evaluation") {
    Rng rng(8);
    const MlpParams p = init_mlp({4, 6, 2, 3}, rng);
    const Matrix x = random_matrix(4, 5, rng);
    const Matrix y = forward(p, x);
    for (std::size_t j = 0; j < 5; ++j) {
        Matrix xj(4, 1);
        for (std::size_t i = 0; i < 4; ++i) xj(i, 0) = x(i, j);
        const Matrix yj = forward(p, xj);
        for (std::size_t i = 0; i < 3; ++i) CHECK(y(i, j) == doctest::Approx(yj(i, 0)).epsilon(1e-14));
    }
}

TEST_CASE("backward: zero cotangent, linearity, finite differences") {
    Rng rng(10);
    MlpParams p = init_mlp({3, 5, 2, 2}, rng);
    const Matrix x = random_matrix(3, 4, rng);
    ForwardCache cache;
    forward(p, x, &cache);

    const MlpGrads zero = backward(p, cache, Matrix(2, 4));
    for (double g : flatten(zero)) CHECK(g == 0.0);

    const Matrix d = random_matrix(2, 4, rng);
    Matrix d2 = d;
    d2 *= 2.0;
    const std::vector<double> g1 = flatten(backward(p, cache, d));
    const std::vector<double> g2 = flatten(backward(p, cache, d2));
    for (std::size_t k = 0; k < g1.size(); ++k)
        CHECK(g2[k] == doctest::Approx(2.0 * g1[k]).epsilon(1e-12));

    gradient_check({3, 3, 1, 2}, 101);
    gradient_check({5, 17, 5, 1}, 103);
}

TEST_CASE("backward rejects a mismatched cotangent") {
    Rng rng(12);
    MlpParams p = init_mlp({3, 4, 1, 2}, rng);
    ForwardCache cache;
    forward(p, random_matrix(3, 4, rng), &cache);
    CHECK_THROWS(backward(p, cache, Matrix(2, 5)));
    CHECK_THROWS(backward(p, cache, Matrix(3, 4)));
}

TEST_CASE("param_count formula") {
    CHECK(param_count(MlpShape{2, 3, 2, 1}) == 24);
    CHECK(param_count(MlpShape{7, 4, 1, 3}) == 7 * 4 + 4 + 4 * 3);
    // reference-scale pair: one wide net vs 50 narrow ones, gap below 0.2%
    const std::size_t unstacked = param_count(MlpShape{400, 495, 5, 50});
    const std::size_t stacked = 50 * param_count(MlpShape{400, 42, 5, 1});
    CHECK(unstacked == 1205325);
    const double gap = std::abs(double(unstacked) - double(stacked)) / double(stacked);
    CHECK(gap < 0.002);
}

TEST_CASE("checkpoint round trip") {
    Rng rng(14);
    const MlpParams p = init_mlp({3, 4, 2, 2}, rng);
    const std::string path = (std::filesystem::temp_directory_path() / "mlp_ckpt.txt").string();
    save_mlp(p, path);
    const MlpParams back = load_mlp(path);
    CHECK(flatten(back.layers) == flatten(p.layers));
    CHECK(back.shape.width == 4);
    std::filesystem::remove(path);
}
