#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "doctest.h"

#include "donet/pde.hpp"
#include "donet/svd.hpp"

using namespace donet;

TEST_CASE("sample_inputs: emptiness, determinism, moments") {
    InputSpec spec;
    spec.n_modes = 5;
    spec.frequencies = {1, 2, 3, 4, 5};
    Rng r1(5), r2(5);
    CHECK(sample_inputs(spec, 0, r1).cols() == 0);
    CHECK(sample_inputs(spec, 3, r1) == sample_inputs(spec, 3, r2));
    Rng r3(6);
    const Matrix c = sample_inputs(spec, 10000, r3);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        sum += c.data()[i];
        sq += c.data()[i] * c.data()[i];
    }
    CHECK(std::abs(sum / double(c.size())) < 0.02);
    CHECK(std::abs(sq / double(c.size()) - 1.0 / 3.0) < 0.02);
}

TEST_CASE("encode/decode round trips") {
    const double pi = std::numbers::pi;
    InputSpec spec;
    spec.n_modes = 2;
    spec.frequencies = {pi, 2 * pi};
    const std::vector<double> mesh3 = encoding_mesh(3);

    Matrix zero(2, 1);
    const Matrix p0 = encode_inputs(zero, spec, mesh3);
    for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p0.data()[i] == 0.0);

    Matrix a(2, 1);
    a(0, 0) = 0.5;
    a(1, 0) = -0.25;
    const Matrix back = decode_inputs(encode_inputs(a, spec, mesh3), spec, mesh3);
    CHECK(back(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(back(1, 0) == doctest::Approx(-0.25).epsilon(1e-12));

    InputSpec spec5;
    spec5.n_modes = 5;
    spec5.frequencies = {pi, 2 * pi, 3 * pi, 4 * pi, 5 * pi};
    Rng rng(7);
    const Matrix a5 = sample_inputs(spec5, 4, rng);
    const std::vector<double> mesh5 = encoding_mesh(5);
    const Matrix b5 = decode_inputs(encode_inputs(a5, spec5, mesh5), spec5, mesh5);
    for (std::size_t i = 0; i < a5.size(); ++i)
        CHECK(std::abs(b5.data()[i] - a5.data()[i]) < 1e-10);

    CHECK_THROWS(encode_inputs(a5, spec5, encoding_mesh(4))); // M < L loses information
}

TEST_CASE("AD solves: zero input, single-mode analytic comparison") {
    ProblemSpec ps = default_problem_spec(ProblemKind::AdvectionDiffusion, 0.5);
    const std::vector<double> u0 = solve(ps, std::vector<double>(20, 0.0));
    for (double u : u0) CHECK(u == 0.0);

    std::vector<double> coeffs(20, 0.0);
    coeffs[0] = 1.0; // p(x) = sin(2 pi x)
    const std::vector<double> u = solve(ps, coeffs);
    const std::vector<double> grid = solution_grid(ps);
    double worst = 0.0;
    const double c = 2.0 / std::numbers::pi;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double exact =
            std::exp(-0.005) * std::sin(2.0 * std::numbers::pi * (grid[j] - 0.5 * c));
        worst = std::max(worst, std::abs(u[j] - exact));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("analytic AD oracle") {
    const std::vector<double> grid = solution_grid(
        default_problem_spec(ProblemKind::AdvectionDiffusion, 0.5));
    const std::vector<double> zero = analytic_ad(std::vector<double>(20, 0.0), 0.5, grid);
    for (double u : zero) CHECK(u == 0.0);

    std::vector<double> mode3(20, 0.0);
    mode3[2] = 1.0;
    const std::vector<double> u = analytic_ad(mode3, 0.7, grid);
    const double c = 2.0 / std::numbers::pi;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double exact = std::exp(-0.01 * 9.0 * 0.7) *
                             std::sin(6.0 * std::numbers::pi * (grid[j] - c * 0.7));
        CHECK(u[j] == doctest::Approx(exact).epsilon(1e-10));
    }

    // tau = 0 returns the sampled input
    std::vector<double> a(20, 0.0);
    a[0] = 0.3;
    a[4] = -0.8;
    const std::vector<double> p = analytic_ad(a, 0.0, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double exact = 0.3 * std::sin(2 * std::numbers::pi * grid[j]) +
                             -0.8 * std::sin(10 * std::numbers::pi * grid[j]);
        CHECK(p[j] == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("AD solver converges to the analytic solution at order >= 1.9") {
    std::vector<double> coeffs(20, 0.0);
    coeffs[1] = 0.7;
    coeffs[3] = -0.4;
    std::vector<double> errs;
    for (std::size_t n : {50u, 100u, 200u}) {
        ProblemSpec ps = default_problem_spec(ProblemKind::AdvectionDiffusion, 0.25);
        ps.grid_points = n;
        const std::vector<double> u = solve(ps, coeffs);
        const std::vector<double> exact = analytic_ad(coeffs, 0.25, solution_grid(ps));
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(u[j] - exact[j]));
        errs.push_back(worst);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
}

TEST_CASE("KdV conserves mass") {
    ProblemSpec ps = default_problem_spec(ProblemKind::KdV, 0.2);
    ps.grid_points = 100;
    ps.input_dim = 50;
    std::vector<double> coeffs(5, 0.0);
    coeffs[0] = 0.8;
    coeffs[2] = -0.5;
    const std::vector<double> u = solve(ps, coeffs);
    const std::vector<double> p0 =
        evaluate_input(coeffs, ps.input, solution_grid(ps));
    const double m0 = std::accumulate(p0.begin(), p0.end(), 0.0);
    const double m1 = std::accumulate(u.begin(), u.end(), 0.0);
    CHECK(std::abs(m1 - m0) <= 1e-6 * std::max(1.0, std::abs(m0)));
}

TEST_CASE("Burgers linearizes to the heat equation at tiny amplitude") {
    ProblemSpec ps = default_problem_spec(ProblemKind::Burgers, 0.1);
    ps.grid_points = 64;
    ps.spectral_basis = 32;
    std::vector<double> coeffs(5, 0.0);
    coeffs[0] = 1e-6; // p(x) = 1e-6 sin(pi x)
    const std::vector<double> u = solve(ps, coeffs);
    const std::vector<double> grid = solution_grid(ps);
    const double pi = std::numbers::pi;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double exact = 1e-6 * std::exp(-0.01 * pi * pi * 0.1) * std::sin(pi * grid[j]);
        CHECK(std::abs(u[j] - exact) <= 0.01 * 1e-6);
    }
}

TEST_CASE("solver instability raises a step-indexed error") {
    ProblemSpec ps = default_problem_spec(ProblemKind::KdV, 1.0);
    ps.grid_points = 100;
    ps.input_dim = 50;
    ps.dt = 0.05; // far above the dispersive stability bound
    std::vector<double> coeffs(5, 0.0);
    coeffs[0] = 1.0;
    CHECK_THROWS_WITH_AS(solve(ps, coeffs), doctest::Contains("instability"), std::runtime_error);
}

TEST_CASE("build_dataset: emptiness, determinism, rank structure") {
    ProblemSpec ad = default_problem_spec(ProblemKind::AdvectionDiffusion, 0.5);
    Rng rng(11);
    const auto [tr0, te0] = build_dataset(ad, 0, 2, rng);
    CHECK(tr0.a.cols() == 0);
    CHECK(te0.a.cols() == 2);

    Rng r1(13), r2(13);
    const auto [tra, tea] = build_dataset(ad, 3, 2, r1);
    const auto [trb, teb] = build_dataset(ad, 3, 2, r2);
    CHECK(tra.a == trb.a);
    CHECK(tea.p_hat == teb.p_hat);

    // AD solutions share a 20-dimensional range
    Rng r3(17);
    const auto [ad_tr, ad_te] = build_dataset(ad, 40, 2, r3);
    CHECK(numerical_rank(ad_tr.a) == 20);

    // KdV at reduced scale is full rank
    ProblemSpec kdv = default_problem_spec(ProblemKind::KdV, 0.2);
    kdv.grid_points = 100;
    kdv.input_dim = 50;
    Rng r4(19);
    const auto [kdv_tr, kdv_te] = build_dataset(kdv, 60, 2, r4);
    CHECK(numerical_rank(kdv_tr.a) == std::min<std::size_t>(100, 60));
}

TEST_CASE("dataset directory round trip") {
    ProblemSpec ad = default_problem_spec(ProblemKind::AdvectionDiffusion, 0.5);
    ad.grid_points = 50;
    ad.input_dim = 40;
    Rng rng(23);
    const auto [tr, te] = build_dataset(ad, 3, 2, rng);
    const std::string dir = (std::filesystem::temp_directory_path() / "ds_rt").string();
    save_dataset(tr, dir);
    const Dataset back = load_dataset(dir);
    CHECK(back.a == tr.a);
    CHECK(back.p_hat == tr.p_hat);
    CHECK(back.coeffs == tr.coeffs);
    CHECK(back.grid == tr.grid);
    CHECK(back.meta.kind == tr.meta.kind);
    CHECK(back.seed == tr.seed);
    std::filesystem::remove_all(dir);
}
