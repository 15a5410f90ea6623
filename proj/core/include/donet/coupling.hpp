#pragma once

#include <string>
#include <vector>

#include "donet/deeponet.hpp"
#include "donet/matrix.hpp"

namespace donet {

/// First-order decomposition of the loss change produced by one gradient
/// step of size alpha on the modified model. S is N x N with
///   S_ij = -(alpha / (n^2 m^2)) sigma_i^2 sigma_j^2 <grad L_i(eval), grad L_j(train)>,
/// d = tr(S) (<= 0 when eval = train), omega the off-diagonal sum, and
/// gamma = omega / (d + omega) when the denominator is nonzero.
struct CouplingReport {
    Matrix s;            // N x N
    double d = 0.0;
    double omega = 0.0;
    double gamma = 0.0;
    bool gamma_defined = false;
    double alpha = 0.0;
    std::size_t epoch = 0;
    double taylor_pred = 0.0; // d + omega
    double measured_dl = 0.0; // realized loss change of the GD step
    bool has_taylor = false;
};

enum class GradientRole { Train, Test };

/// Per-mode parameter gradients at the current branch parameters, one flat
/// row per mode (N x P). Train: L_i = ||b_i - v_i||^2 on the training
/// inputs; test: L_i = (m_tr/m_te) ||b_i - w_i||^2 on the test inputs.
Matrix per_mode_gradients(const Model& model, const TrainData& data,
                          GradientRole role = GradientRole::Train);

/// Full-loss gradient (1/(n m)) sum_i sigma_i^2 grad L_i from the flat
/// per-mode rows.
std::vector<double> full_gradient_from_modes(const Matrix& mode_grads,
                                             const std::vector<double>& sigmas, std::size_t n_grid,
                                             std::size_t m_tr);

CouplingReport coupling_matrix(const Matrix& eval_grads, const Matrix& train_grads,
                               const std::vector<double>& sigmas, double alpha,
                               std::size_t n_grid, std::size_t m_tr);

/// Training-loss change realized by one plain-GD step theta - alpha * g,
/// evaluated on a copy of the model.
double measured_loss_change(const Model& model, const TrainData& data,
                            const std::vector<double>& full_grad, double alpha);

/// Coupling report with the first-order Taylor prediction d + omega and
/// the realized loss change filled in.
CouplingReport taylor_check(const Model& model, const TrainData& data, double alpha);

/// coupling.csv: epoch, d, omega, gamma, taylor_pred, measured_dl (taylor
/// columns empty when not computed; gamma "undefined" when d + omega = 0).
void save_coupling_csv(const std::vector<CouplingReport>& series, const std::string& path);

} // namespace donet
