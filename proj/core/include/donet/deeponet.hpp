#pragma once

#include <functional>
#include <optional>
#include <string>

#include "donet/errdecomp.hpp"
#include "donet/matrix.hpp"
#include "donet/mlp.hpp"
#include "donet/optim.hpp"
#include "donet/pde.hpp"
#include "donet/svd.hpp"

namespace donet {

enum class TrunkKind { Learned, SvdScaled, SvdUnscaled, Legendre, Chebyshev, Cosine };

TrunkKind trunk_kind_from_string(const std::string& s);
std::string to_string(TrunkKind k);

/// Fixed trunk matrix: column k is the k-th basis function on the grid.
/// SVD variants take phi_k (and sigma_k phi_k for the scaled form) from a
/// precomputed split of the training data.
Matrix trunk_matrix(TrunkKind kind, const std::vector<double>& grid, const SvdSplit* train_svd,
                    std::size_t n_basis);

struct Model {
    TrunkKind trunk_kind = TrunkKind::SvdScaled;
    Matrix trunk;                        // n x N for fixed variants
    std::optional<MlpParams> trunk_net;  // learned variant
    bool stacked = false;
    std::vector<MlpParams> branch;       // 1 net (unstacked) or N nets (stacked)
    std::size_t inner_dim = 0;           // N
    std::string dataset_fingerprint;
};

/// Branch outputs B (m x N) for a batch of inputs (M x m).
Matrix branch_outputs(const Model& model, const Matrix& p_hat);

/// Branch forward pass with the caches needed for backprop.
struct BranchEval {
    Matrix b; // m x N
    std::vector<ForwardCache> caches;
};
BranchEval branch_forward(const Model& model, const Matrix& p_hat);

/// Gradient of sum_{j,k} d_b(j,k) B(j,k) w.r.t. the flat branch parameters.
std::vector<double> branch_backward_flat(const Model& model, const BranchEval& ev,
                                         const Matrix& d_b);

/// Trunk matrix T (n x N); evaluates the trunk net on the grid if learned.
Matrix trunk_eval(const Model& model, const std::vector<double>& grid);

/// Prediction T B^T (n x m).
Matrix predict(const Model& model, const Matrix& p_hat);
Matrix predict(const Model& model, const Matrix& p_hat, const std::vector<double>& grid);

/// Everything a training run needs; the SVD-trunk fields are populated for
/// the modified model (branch targets V1 on train, W1 on test).
struct TrainData {
    Matrix a_tr, p_tr;
    Matrix a_te, p_te;
    std::vector<double> grid;
    SvdSplit split;               // split of A_tr at N
    Matrix w1;                    // m_te x N optimal test coefficients
    double eps_trunk_tr = 0.0;    // ||Sigma_2||_F^2
};

/// Computes the training SVD, the N-split, and W1 from a dataset pair.
TrainData make_train_data(const Dataset& train, const Dataset& test, std::size_t n_modes);

struct TrainConfig {
    OptimizerConfig opt;
    double reweight_e = 0.0;          // modified model only
    std::size_t epochs = 0;
    std::size_t mode_snapshot_every = 0; // 0 = initial + final only
    double divergence_limit = 1e12;
    /// Called after every epoch (and once at epoch 0).
    std::function<void(std::size_t, const Model&)> observer;
};

struct TrainHistory {
    std::vector<std::size_t> epoch;
    std::vector<double> train_loss;
    std::vector<double> test_loss;
    std::vector<double> lr;
    std::vector<std::pair<std::size_t, ModeLossReport>> mode_snapshots;
    bool diverged = false;
};

/// Full-batch training. Modified model (SVD-scaled trunk): branch-only
/// loss (1/(n m)) sum_i sigma_i^{2+2e} L_i for gradients, with the e = 0
/// loss recorded as the metric. Any other model: pointwise MSE
/// (1/(n m)) ||T B^T - A||_F^2, trained jointly when the trunk is learned.
TrainHistory train(Model& model, const TrainData& data, const TrainConfig& cfg);

/// Recorded losses at the current parameters (train metric, test metric).
std::pair<double, double> evaluate_losses(const Model& model, const TrainData& data);

/// Flat view of all trainable parameters (branch nets in order, then the
/// learned trunk if present).
std::vector<double> flatten_params(const Model& model);
void assign_params_from_flat(Model& model, const std::vector<double>& flat);

/// Smallest unstacked width whose parameter count is closest to N copies
/// of the stacked net; ties go to the smaller width.
std::size_t match_unstacked_width(std::size_t w_stacked, std::size_t n_modes, std::size_t depth,
                                  std::size_t input_dim);

void save_history_csv(const TrainHistory& h, const std::string& path);

} // namespace donet
