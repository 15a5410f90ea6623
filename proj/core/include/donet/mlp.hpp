#pragma once

#include "donet/matrix.hpp"
#include "donet/rng.hpp"

namespace donet {

/// GELU with exact erf: x/2 * (1 + erf(x/sqrt(2))).
double gelu(double x);
double gelu_prime(double x);

struct MlpShape {
    std::size_t input_dim = 1;
    std::size_t width = 1;
    std::size_t depth = 1; // number of hidden layers
    std::size_t output_dim = 1;
};

/// Weights and biases of one layer; the output layer carries no bias
/// (b stays empty) and no activation.
struct Layer {
    Matrix w;              // out x in
    std::vector<double> b; // length out, empty for the output layer
};

struct MlpParams {
    MlpShape shape;
    std::vector<Layer> layers; // depth hidden layers + 1 linear output layer
};

/// Gradients mirror the parameter layout.
using MlpGrads = std::vector<Layer>;

/// Glorot-uniform weights, zero biases, deterministic per rng state.
MlpParams init_mlp(const MlpShape& shape, Rng& rng);

/// Pre-activations and layer inputs saved by forward for backward.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;  // pre-activation of each hidden layer
    std::vector<Matrix> post; // activation of each hidden layer
};

/// Batched forward pass; x_batch is input_dim x batch, one column per sample.
Matrix forward(const MlpParams& p, const Matrix& x_batch, ForwardCache* cache = nullptr);

/// Exact gradient of <d_out, forward(p, x)> w.r.t. every parameter.
MlpGrads backward(const MlpParams& p, const ForwardCache& cache, const Matrix& d_out);

/// M*w + w + (D-1)(w^2 + w) + w*output_dim.
std::size_t param_count(const MlpShape& shape);
std::size_t param_count(const MlpParams& p);

/// Canonical flat layout: layers in order, weights row-major, then bias.
std::vector<double> flatten(const std::vector<Layer>& layers);
void assign_from_flat(std::vector<Layer>& layers, const std::vector<double>& flat);

MlpGrads zeros_like(const MlpParams& p);

/// Checkpoint: JSON header line (shape, seed) followed by the flat
/// parameter vector as a 1-row CSV matrix.
void save_mlp(const MlpParams& p, const std::string& path);
MlpParams load_mlp(const std::string& path);

} // namespace donet
