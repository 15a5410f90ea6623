#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "donet/matrix.hpp"
#include "donet/rng.hpp"

namespace donet {

enum class ProblemKind { AdvectionDiffusion, KdV, Burgers };

ProblemKind problem_kind_from_string(const std::string& s);
std::string to_string(ProblemKind k);

/// Random input functions p(x) = sum_i a_i sin(omega_i x), a_i ~ U(-1, 1).
struct InputSpec {
    std::size_t n_modes = 5;          // L
    std::vector<double> frequencies;  // omega_i, strictly positive, distinct
    double coeff_low = -1.0;
    double coeff_high = 1.0;
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::KdV;
    double tau = 0.2;
    std::size_t grid_points = 400; // n
    std::size_t input_dim = 400;   // M
    std::size_t spectral_basis = 100; // Burgers only
    double dt = 0.0;               // 0 = choose from stability bounds (Burgers: 1e-5)
    InputSpec input;
};

/// Reference-scale parameters: AD L=20 omega=2*pi*i n=M=200; KdV L=5
/// omega=2*pi*i n=M=400; Burgers L=5 omega=pi*i n=200 M=50.
ProblemSpec default_problem_spec(ProblemKind kind, double tau);

struct Dataset {
    Matrix a;              // n x m solution snapshots
    Matrix p_hat;          // M x m sampled inputs
    Matrix coeffs;         // L x m coefficients
    std::vector<double> grid;
    ProblemSpec meta;
    std::uint64_t seed = 0;
};

/// Solver grid: periodic problems use x_j = j/n (j = 0..n-1); Burgers uses
/// the Dirichlet interior mesh x_j = j/(n+1). Trunk evaluation reuses it.
std::vector<double> solution_grid(const ProblemSpec& spec);

/// Interior encoding mesh x_j = j/(M+1), j = 1..M.
std::vector<double> encoding_mesh(std::size_t m_points);

/// L x m coefficients, i.i.d. uniform on [coeff_low, coeff_high).
Matrix sample_inputs(const InputSpec& spec, std::size_t m, Rng& rng);

/// p_hat = Psi a with Psi_{ji} = sin(omega_i xbar_j). Requires M >= L.
Matrix encode_inputs(const Matrix& coeffs, const InputSpec& spec,
                     const std::vector<double>& sample_points);
/// coeffs = Psi^+ p_hat; exact left inverse of encode when M >= L.
Matrix decode_inputs(const Matrix& p_hat, const InputSpec& spec,
                     const std::vector<double>& sample_points);

/// Evaluate p(x) = sum_i a_i sin(omega_i x) on a grid.
std::vector<double> evaluate_input(const std::vector<double>& coeffs, const InputSpec& spec,
                                   const std::vector<double>& grid);

/// Integrate one input column to time tau. AD/KdV: central differences +
/// classical RK4, periodic; Burgers: sine-Galerkin pseudospectral + forward
/// Euler, homogeneous Dirichlet.
std::vector<double> solve(const ProblemSpec& spec, const std::vector<double>& input_coeffs);

/// Exact modal AD solution (amplitude exp(-0.01 i^2 tau), phase shift
/// c*tau with c = 2/pi); solver oracle. Assumes omega_i = 2*pi*i.
std::vector<double> analytic_ad(const std::vector<double>& input_coeffs, double tau,
                                const std::vector<double>& grid);

/// Train/test pair from disjoint RNG substreams of the given seed.
std::pair<Dataset, Dataset> build_dataset(const ProblemSpec& spec, std::size_t m_train,
                                          std::size_t m_test, Rng& rng);

/// Directory layout: meta.json, A.csv, P.csv, coeffs.csv, grid.csv.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

} // namespace donet
