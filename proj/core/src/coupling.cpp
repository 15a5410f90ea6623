#include "donet/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace donet {

Matrix per_mode_gradients(const Model& model, const TrainData& data, GradientRole role) {
    if (model.trunk_kind != TrunkKind::SvdScaled || model.trunk_net)
        throw std::invalid_argument("per_mode_gradients: needs the SVD-scaled branch-only model");
    const bool train = role == GradientRole::Train;
    const Matrix& inputs = train ? data.p_tr : data.p_te;
    const Matrix& targets = train ? data.split.v1 : data.w1;
    const double factor =
        train ? 1.0 : double(data.a_tr.cols()) / double(data.a_te.cols());
    const BranchEval ev = branch_forward(model, inputs);
    const std::size_t n_modes = model.inner_dim;
    Matrix grads;
    for (std::size_t i = 0; i < n_modes; ++i) {
        Matrix d_b(ev.b.rows(), n_modes); // zero except mode i's column
        for (std::size_t j = 0; j < ev.b.rows(); ++j)
            d_b(j, i) = 2.0 * factor * (ev.b(j, i) - targets(j, i));
        const std::vector<double> g = branch_backward_flat(model, ev, d_b);
        if (grads.size() == 0) grads = Matrix(n_modes, g.size());
        if (!std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); }))
            throw std::runtime_error("per_mode_gradients: non-finite gradient for mode " +
                                     std::to_string(i + 1));
        for (std::size_t p = 0; p < g.size(); ++p) grads(i, p) = g[p];
    }
    return grads;
}

std::vector<double> full_gradient_from_modes(const Matrix& mode_grads,
                                             const std::vector<double>& sigmas,
                                             std::size_t n_grid, std::size_t m_tr) {
    std::vector<double> full(mode_grads.cols(), 0.0);
    for (std::size_t i = 0; i < mode_grads.rows(); ++i) {
        const double w = sigmas[i] * sigmas[i] * (1.0 / (double(n_grid) * double(m_tr)));
        for (std::size_t p = 0; p < mode_grads.cols(); ++p) full[p] += w * mode_grads(i, p);
    }
    return full;
}

CouplingReport coupling_matrix(const Matrix& eval_grads, const Matrix& train_grads,
                               const std::vector<double>& sigmas, double alpha,
                               std::size_t n_grid, std::size_t m_tr) {
    const std::size_t n_modes = eval_grads.rows();
    if (train_grads.rows() != n_modes || train_grads.cols() != eval_grads.cols())
        throw std::invalid_argument("coupling_matrix: gradient list shapes disagree");
    if (sigmas.size() < n_modes)
        throw std::invalid_argument("coupling_matrix: fewer singular values than modes");
    const Matrix gram = multiply_a_bt(eval_grads, train_grads);
    const double nm = double(n_grid) * double(m_tr);
    CouplingReport r;
    r.alpha = alpha;
    r.s = Matrix(n_modes, n_modes);
    for (std::size_t i = 0; i < n_modes; ++i)
        for (std::size_t j = 0; j < n_modes; ++j) {
            const double sij = -(alpha / (nm * nm)) * sigmas[i] * sigmas[i] * sigmas[j] *
                               sigmas[j] * gram(i, j);
            r.s(i, j) = sij;
            (i == j ? r.d : r.omega) += sij;
        }
    if (r.d + r.omega != 0.0) {
        r.gamma = r.omega / (r.d + r.omega);
        r.gamma_defined = true;
    }
    return r;
}

double measured_loss_change(const Model& model, const TrainData& data,
                            const std::vector<double>& full_grad, double alpha) {
    const double before = evaluate_losses(model, data).first;
    Model stepped = model;
    std::vector<double> theta = flatten_params(stepped);
    if (theta.size() != full_grad.size())
        throw std::invalid_argument("measured_loss_change: gradient length mismatch");
    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] -= alpha * full_grad[p];
    assign_params_from_flat(stepped, theta);
    const double after = evaluate_losses(stepped, data).first;
    if (!std::isfinite(after)) throw std::runtime_error("measured_loss_change: divergent step");
    return after - before;
}

CouplingReport taylor_check(const Model& model, const TrainData& data, double alpha) {
    const Matrix grads = per_mode_gradients(model, data);
    const std::size_t n = data.a_tr.rows();
    const std::size_t m = data.a_tr.cols();
    CouplingReport rep = coupling_matrix(grads, grads, data.split.sigma1, alpha, n, m);
    rep.taylor_pred = rep.d + rep.omega;
    rep.measured_dl = measured_loss_change(
        model, data, full_gradient_from_modes(grads, data.split.sigma1, n, m), alpha);
    rep.has_taylor = true;
    return rep;
}

void save_coupling_csv(const std::vector<CouplingReport>& series, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_coupling_csv: cannot open " + path);
    f << "epoch,d,omega,gamma,taylor_pred,measured_dl\n";
    char buf[200];
    for (const CouplingReport& r : series) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", r.epoch, r.d, r.omega);
        f << buf;
        if (r.gamma_defined) {
            std::snprintf(buf, sizeof buf, "%.17g", r.gamma);
            f << buf;
        } else {
            f << "undefined";
        }
        if (r.has_taylor) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.taylor_pred, r.measured_dl);
            f << buf;
        } else {
            f << ",,\n";
        }
    }
}

} // namespace donet
