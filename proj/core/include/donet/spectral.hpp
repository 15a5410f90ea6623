#pragma once

#include <string>
#include <vector>

#include "donet/matrix.hpp"
#include "donet/rng.hpp"

namespace donet {

/// Controls synthetic right-singular-function generation: N target
/// functions with dictated frequencies f_j = f0 * exp(alpha*(j-1)) for
/// alpha > 0 (or exp(alpha*(j-1-N)) otherwise) and singular values
/// sigma_j = exp(beta*j).
struct SyntheticSpec {
    std::size_t n_modes = 5;
    double f0 = 1.0;
    double alpha = 0.2;
    double beta = -0.01;
    std::size_t m = 300;
    std::size_t input_dim = 5;
    std::size_t trials = 200;
    double threshold = 0.05;
};

enum class FrequencyMethod { TV, LaplacianEnergy, ProjectedFourier };

struct FrequencyEstimate {
    FrequencyMethod method = FrequencyMethod::TV;
    std::size_t k_neighbors = 0;
    std::vector<double> values;    // one per target function
    std::vector<double> relative;  // values / max(values)
};

struct KnnResult {
    std::vector<std::vector<std::size_t>> neighbors; // m lists of k indices
    bool has_duplicates = false;                     // zero-distance pairs present
};

/// Brute-force k nearest neighbors over the columns of an M x m point
/// matrix. Self excluded; distance ties broken by lower index.
KnnResult knn(const Matrix& points, std::size_t k);

/// Mean difference quotient over the kNN graph:
/// (1/(mk)) sum_i sum_{j in N(i)} |y_i - y_j| / ||x_i - x_j||.
double tv_frequency(const Matrix& points, const std::vector<double>& y, std::size_t k);

/// Rayleigh quotient y^T L y / y^T y of the symmetrized Gaussian-weighted
/// kNN graph Laplacian. Exactly 0 for constant y.
double laplacian_energy(const Matrix& points, const std::vector<double>& y, std::size_t k);

/// Power-weighted mean frequency of the non-uniform Fourier spectrum of y
/// along each projection direction, averaged over projections.
double projected_fourier(const Matrix& points, const std::vector<double>& y,
                         const std::vector<std::vector<double>>& projections,
                         const std::vector<double>& freq_grid);

/// First z left singular vectors of the point matrix (default projections).
std::vector<std::vector<double>> default_projections(const Matrix& points, std::size_t z);

/// Uniform frequency grid of `count` values from 0 to the Nyquist-like
/// bound m / (2 * projected range).
std::vector<double> default_freq_grid(const Matrix& points, const std::vector<double>& projection,
                                      std::size_t count = 64);

/// Dictated frequencies f_j per the alpha > 0 / alpha < 0 case split.
std::vector<double> dictated_frequencies(const SyntheticSpec& spec);

struct SynthRsf {
    Matrix points; // M x m sample locations
    Matrix v;      // m x N orthonormal columns
};

/// Generates N orthonormal target functions with prescribed nominal
/// frequencies: rejection-sampled sinusoids along random directions,
/// finished with modified Gram-Schmidt (plus one re-orthogonalization).
SynthRsf synth_rsf(const SyntheticSpec& spec, Rng& rng);

struct SynthBundle {
    Matrix a;                       // n x m, Phi diag(sigma) V^T
    Matrix points;                  // M x m branch inputs
    Matrix v;                       // m x N
    Matrix phi;                     // n x N canonical unit columns
    std::vector<double> sigma;      // e^{beta j}
    std::vector<double> frequencies;
};

/// Assembles a rank-N dataset A = Phi diag(sigma) V^T around synth_rsf
/// output. n_grid = 0 uses n = N (Phi = I).
SynthBundle synth_dataset(const SyntheticSpec& spec, Rng& rng, std::size_t n_grid = 0);

/// frequencies.csv: columns mode, tv_k3, le_k50, proj_fourier, dictated
/// (last column only when provided).
void save_frequencies_csv(const std::vector<double>& tv, const std::vector<double>& le,
                          const std::vector<double>& pf, const std::vector<double>* dictated,
                          const std::string& path);

} // namespace donet
