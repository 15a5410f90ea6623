#include "donet/deeponet.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace donet {

TrunkKind trunk_kind_from_string(const std::string& s) {
    if (s == "learned") return TrunkKind::Learned;
    if (s == "svd-scaled" || s == "svd") return TrunkKind::SvdScaled;
    if (s == "svd-unscaled") return TrunkKind::SvdUnscaled;
    if (s == "legendre") return TrunkKind::Legendre;
    if (s == "chebyshev") return TrunkKind::Chebyshev;
    if (s == "cosine") return TrunkKind::Cosine;
    throw std::invalid_argument("unknown trunk kind: " + s);
}

std::string to_string(TrunkKind k) {
    switch (k) {
        case TrunkKind::Learned: return "learned";
        case TrunkKind::SvdScaled: return "svd-scaled";
        case TrunkKind::SvdUnscaled: return "svd-unscaled";
        case TrunkKind::Legendre: return "legendre";
        case TrunkKind::Chebyshev: return "chebyshev";
        case TrunkKind::Cosine: return "cosine";
    }
    return "?";
}

Matrix trunk_matrix(TrunkKind kind, const std::vector<double>& grid, const SvdSplit* train_svd,
                    std::size_t n_basis) {
    const std::size_t n = grid.size();
    Matrix t(n, n_basis);
    switch (kind) {
        case TrunkKind::SvdScaled:
        case TrunkKind::SvdUnscaled: {
            if (!train_svd || train_svd->sigma1.size() < n_basis)
                throw std::invalid_argument("trunk_matrix: SVD split has fewer than N modes");
            if (train_svd->phi1.rows() != n)
                throw std::invalid_argument("trunk_matrix: SVD basis grid size mismatch");
            for (std::size_t k = 0; k < n_basis; ++k) {
                const double scale = kind == TrunkKind::SvdScaled ? train_svd->sigma1[k] : 1.0;
                for (std::size_t i = 0; i < n; ++i) t(i, k) = scale * train_svd->phi1(i, k);
            }
            break;
        }
        case TrunkKind::Legendre:
        case TrunkKind::Chebyshev: {
            const bool legendre = kind == TrunkKind::Legendre;
            for (std::size_t i = 0; i < n; ++i) {
                const double y = 2.0 * grid[i] - 1.0;
                double pk = 1.0, pk1 = 0.0; // P_k, P_{k-1}
                for (std::size_t k = 0; k < n_basis; ++k) {
                    t(i, k) = pk;
                    const double next = legendre
                        ? ((2.0 * double(k) + 1.0) * y * pk - double(k) * pk1) / double(k + 1)
                        : (k == 0 ? y : 2.0 * y * pk - pk1);
                    pk1 = pk;
                    pk = next;
                }
            }
            break;
        }
        case TrunkKind::Cosine: {
            const double pi = 3.14159265358979323846;
            for (std::size_t k = 0; k < n_basis; ++k)
                for (std::size_t i = 0; i < n; ++i) t(i, k) = std::cos(double(k) * pi * grid[i]);
            break;
        }
        case TrunkKind::Learned:
            throw std::invalid_argument("trunk_matrix: learned trunk has no fixed matrix");
    }
    return t;
}

BranchEval branch_forward(const Model& model, const Matrix& p_hat) {
    BranchEval ev;
    if (model.stacked) {
        ev.caches.resize(model.branch.size());
        ev.b = Matrix(p_hat.cols(), model.inner_dim);
        for (std::size_t k = 0; k < model.branch.size(); ++k) {
            const Matrix out = forward(model.branch[k], p_hat, &ev.caches[k]); // 1 x m
            for (std::size_t j = 0; j < p_hat.cols(); ++j) ev.b(j, k) = out(0, j);
        }
    } else {
        ev.caches.resize(1);
        ev.b = forward(model.branch.front(), p_hat, &ev.caches.front()).transposed();
    }
    return ev;
}

Matrix branch_outputs(const Model& model, const Matrix& p_hat) {
    if (model.stacked) return branch_forward(model, p_hat).b;
    return forward(model.branch.front(), p_hat).transposed();
}

std::vector<double> branch_backward_flat(const Model& model, const BranchEval& ev,
                                         const Matrix& d_b) {
    std::vector<double> flat;
    if (model.stacked) {
        for (std::size_t k = 0; k < model.branch.size(); ++k) {
            Matrix d_out(1, d_b.rows());
            for (std::size_t j = 0; j < d_b.rows(); ++j) d_out(0, j) = d_b(j, k);
            const MlpGrads g = backward(model.branch[k], ev.caches[k], d_out);
            const std::vector<double> gk = flatten(g);
            flat.insert(flat.end(), gk.begin(), gk.end());
        }
    } else {
        const MlpGrads g = backward(model.branch.front(), ev.caches.front(), d_b.transposed());
        flat = flatten(g);
    }
    return flat;
}

Matrix trunk_eval(const Model& model, const std::vector<double>& grid) {
    if (model.trunk_kind != TrunkKind::Learned) return model.trunk;
    Matrix x(1, grid.size());
    std::copy(grid.begin(), grid.end(), x.data());
    return forward(*model.trunk_net, x).transposed();
}

Matrix predict(const Model& model, const Matrix& p_hat, const std::vector<double>& grid) {
    return multiply_a_bt(trunk_eval(model, grid), branch_outputs(model, p_hat));
}

Matrix predict(const Model& model, const Matrix& p_hat) {
    if (model.trunk_kind == TrunkKind::Learned)
        throw std::invalid_argument("predict: learned trunk needs an evaluation grid");
    return multiply_a_bt(model.trunk, branch_outputs(model, p_hat));
}

TrainData make_train_data(const Dataset& train, const Dataset& test, std::size_t n_modes) {
    TrainData d;
    d.a_tr = train.a;
    d.p_tr = train.p_hat;
    d.a_te = test.a;
    d.p_te = test.p_hat;
    d.grid = train.grid;
    const SvdFactors f = svd(train.a);
    if (n_modes > f.s.size()) throw std::invalid_argument("make_train_data: N exceeds rank bound");
    d.split = truncate(f, n_modes);
    d.w1 = test_coefficients(d.split.phi1, d.split.sigma1, test.a);
    for (double s : d.split.sigma2) d.eps_trunk_tr += s * s;
    return d;
}

namespace {

bool is_modified(const Model& m) {
    return m.trunk_kind == TrunkKind::SvdScaled && !m.trunk_net;
}

double modified_loss(const Matrix& b, const Matrix& targets, const std::vector<double>& sigma,
                     std::size_t n_grid, std::size_t m_norm) {
    double loss = 0.0;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        double l = 0.0;
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double d = b(j, k) - targets(j, k);
            l += d * d;
        }
        loss += sigma[k] * sigma[k] * l;
    }
    return loss / (double(n_grid) * double(m_norm));
}

} // namespace

std::pair<double, double> evaluate_losses(const Model& model, const TrainData& data) {
    const std::size_t n = data.a_tr.rows();
    if (is_modified(model)) {
        const Matrix b_tr = branch_outputs(model, data.p_tr);
        const Matrix b_te = branch_outputs(model, data.p_te);
        return {modified_loss(b_tr, data.split.v1, data.split.sigma1, n, data.a_tr.cols()),
                modified_loss(b_te, data.w1, data.split.sigma1, n, data.a_te.cols())};
    }
    Matrix r_tr = predict(model, data.p_tr, data.grid);
    r_tr -= data.a_tr;
    Matrix r_te = predict(model, data.p_te, data.grid);
    r_te -= data.a_te;
    return {r_tr.frobenius_sq() / (double(n) * double(data.a_tr.cols())),
            r_te.frobenius_sq() / (double(n) * double(data.a_te.cols()))};
}

std::vector<double> flatten_params(const Model& model) {
    std::vector<double> flat;
    for (const MlpParams& p : model.branch) {
        const std::vector<double> f = flatten(p.layers);
        flat.insert(flat.end(), f.begin(), f.end());
    }
    if (model.trunk_net) {
        const std::vector<double> f = flatten(model.trunk_net->layers);
        flat.insert(flat.end(), f.begin(), f.end());
    }
    return flat;
}

void assign_params_from_flat(Model& model, const std::vector<double>& flat) {
    std::size_t off = 0;
    auto take = [&](std::vector<Layer>& layers) {
        std::size_t count = 0;
        for (const Layer& l : layers) count += l.w.size() + l.b.size();
        if (off + count > flat.size()) throw std::invalid_argument("assign_params_from_flat: short vector");
        assign_from_flat(layers, {flat.begin() + off, flat.begin() + off + count});
        off += count;
    };
    for (MlpParams& p : model.branch) take(p.layers);
    if (model.trunk_net) take(model.trunk_net->layers);
    if (off != flat.size()) throw std::invalid_argument("assign_params_from_flat: length mismatch");
}

TrainHistory train(Model& model, const TrainData& data, const TrainConfig& cfg) {
    const std::size_t n = data.a_tr.rows();
    const std::size_t m_tr = data.a_tr.cols();
    const bool modified = is_modified(model);
    if (!modified && cfg.reweight_e != 0.0)
        throw std::invalid_argument("train: re-weighting requires the SVD-scaled trunk");

    TrainHistory hist;
    Optimizer opt(cfg.opt);

    auto record = [&](std::size_t epoch) {
        const auto [ltr, lte] = evaluate_losses(model, data);
        hist.epoch.push_back(epoch);
        hist.train_loss.push_back(ltr);
        hist.test_loss.push_back(lte);
        hist.lr.push_back(epoch == 0 ? 0.0 : lr_at(epoch, cfg.opt.alpha1));
        if (!std::isfinite(ltr) || ltr > cfg.divergence_limit) hist.diverged = true;
        return !hist.diverged;
    };
    auto snapshot = [&](std::size_t epoch) {
        if (!modified) return;
        const bool due = epoch == 0 || epoch == cfg.epochs ||
                         (cfg.mode_snapshot_every > 0 && epoch % cfg.mode_snapshot_every == 0);
        if (!due) return;
        const Matrix b_tr = branch_outputs(model, data.p_tr);
        const Matrix b_te = branch_outputs(model, data.p_te);
        hist.mode_snapshots.emplace_back(
            epoch, merge_mode_reports(
                       mode_losses_train(b_tr, data.split.v1, data.split.sigma1),
                       mode_losses_test(b_te, data.w1, m_tr, data.a_te.cols(), data.split.sigma1)));
    };

    record(0);
    snapshot(0);
    if (cfg.observer) cfg.observer(0, model);

    std::vector<double> theta = flatten_params(model);
    const double sigma1 = modified && !data.split.sigma1.empty() ? data.split.sigma1.front() : 1.0;
    const double lr_scale = modified ? std::pow(sigma1, -2.0 * cfg.reweight_e) : 1.0;

    for (std::size_t t = 1; t <= cfg.epochs && !hist.diverged; ++t) {
        std::vector<double> grad;
        if (modified) {
            const BranchEval ev = branch_forward(model, data.p_tr);
            Matrix d_b = ev.b; // (2/(n m)) sigma_k^{2+2e} (B - V1) per column
            d_b -= data.split.v1;
            for (std::size_t k = 0; k < model.inner_dim; ++k) {
                const double w = 2.0 / (double(n) * double(m_tr)) *
                                 std::pow(data.split.sigma1[k], 2.0 + 2.0 * cfg.reweight_e);
                for (std::size_t j = 0; j < d_b.rows(); ++j) d_b(j, k) *= w;
            }
            grad = branch_backward_flat(model, ev, d_b);
        } else {
            const BranchEval ev = branch_forward(model, data.p_tr);
            ForwardCache trunk_cache;
            Matrix trunk;
            if (model.trunk_net) {
                Matrix x(1, data.grid.size());
                std::copy(data.grid.begin(), data.grid.end(), x.data());
                trunk = forward(*model.trunk_net, x, &trunk_cache).transposed();
            } else {
                trunk = model.trunk;
            }
            Matrix resid = multiply_a_bt(trunk, ev.b);
            resid -= data.a_tr;
            const double scale = 2.0 / (double(n) * double(m_tr));
            Matrix d_b = multiply_at_b(resid, trunk); // m x N
            d_b *= scale;
            grad = branch_backward_flat(model, ev, d_b);
            if (model.trunk_net) {
                Matrix d_t = multiply(resid, ev.b); // n x N
                d_t *= scale;
                const MlpGrads tg = backward(*model.trunk_net, trunk_cache, d_t.transposed());
                const std::vector<double> tf = flatten(tg);
                grad.insert(grad.end(), tf.begin(), tf.end());
            }
        }
        opt.step(theta, grad, lr_scale);
        assign_params_from_flat(model, theta);
        if (!record(t)) break;
        snapshot(t);
        if (cfg.observer) cfg.observer(t, model);
    }
    return hist;
}

std::size_t match_unstacked_width(std::size_t w_stacked, std::size_t n_modes, std::size_t depth,
                                  std::size_t input_dim) {
    if (w_stacked < 1 || n_modes < 1 || depth < 1 || input_dim < 1)
        throw std::invalid_argument("match_unstacked_width: arguments must be >= 1");
    const std::size_t target =
        n_modes * param_count(MlpShape{input_dim, w_stacked, depth, 1});
    auto count = [&](std::size_t w) {
        return param_count(MlpShape{input_dim, w, depth, n_modes});
    };
    std::size_t w = 1;
    while (count(w) < target) ++w;
    if (w == 1) return 1;
    const std::size_t over = count(w) - target;
    const std::size_t under = target - count(w - 1);
    return under <= over ? w - 1 : w;
}

void save_history_csv(const TrainHistory& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_history_csv: cannot open " + path);
    f << "epoch,train_loss,test_loss,lr\n";
    char buf[160];
    for (std::size_t i = 0; i < h.epoch.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", h.epoch[i], h.train_loss[i],
                      h.test_loss[i], h.lr[i]);
        f << buf;
    }
}

} // namespace donet
