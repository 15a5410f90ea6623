#include "donet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace donet {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "gd" || s == "GD") return OptimizerKind::GD;
    if (s == "adam" || s == "Adam") return OptimizerKind::Adam;
    if (s == "adagrad" || s == "AdaGrad") return OptimizerKind::AdaGrad;
    throw std::invalid_argument("unknown optimizer kind: " + s);
}

std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::GD: return "gd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::AdaGrad: return "adagrad";
    }
    return "?";
}

double lr_at(std::size_t t, double alpha1) {
    return std::pow(0.95, double(t / 500)) * alpha1;
}

void Optimizer::step(std::vector<double>& theta, const std::vector<double>& grad, double lr_scale) {
    if (theta.size() != grad.size()) throw std::invalid_argument("optimizer step: size mismatch");
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::runtime_error("optimizer step: non-finite gradient component");
    ++t_;
    const double lr = lr_at(t_, cfg_.alpha1) * lr_scale;
    const std::size_t p = theta.size();
    switch (cfg_.kind) {
        case OptimizerKind::GD:
            for (std::size_t i = 0; i < p; ++i) theta[i] -= lr * grad[i];
            break;
        case OptimizerKind::Adam: {
            if (m_.size() != p) {
                m_.assign(p, 0.0);
                v_.assign(p, 0.0);
            }
            const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
            for (std::size_t i = 0; i < p; ++i) {
                m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
                v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
                const double mhat = m_[i] / bc1;
                const double vhat = v_[i] / bc2;
                theta[i] -= lr * mhat / (std::sqrt(vhat + cfg_.eps_bar) + cfg_.eps);
            }
            break;
        }
        case OptimizerKind::AdaGrad: {
            if (g_.size() != p) g_.assign(p, 0.0);
            for (std::size_t i = 0; i < p; ++i) {
                g_[i] += grad[i] * grad[i];
                theta[i] -= lr * grad[i] / (std::sqrt(g_[i]) + cfg_.eps);
            }
            break;
        }
    }
}

std::pair<std::vector<double>, double> reweight_gradient(
    const std::vector<std::vector<double>>& mode_grads,
    const std::vector<double>& sigmas, double e, std::size_t n, std::size_t m_tr) {
    if (mode_grads.size() != sigmas.size())
        throw std::invalid_argument("reweight_gradient: mode/sigma count mismatch");
    if (mode_grads.empty()) return {{}, 1.0};
    const double scale = 1.0 / (double(n) * double(m_tr));
    std::vector<double> g(mode_grads.front().size(), 0.0);
    for (std::size_t i = 0; i < mode_grads.size(); ++i) {
        // sigma^2 factored out so e = 0 reproduces the standard gradient
        // weights bitwise (pow(x, 0) == 1 exactly).
        const double w = sigmas[i] * sigmas[i] * scale * std::pow(sigmas[i], 2.0 * e);
        const std::vector<double>& gi = mode_grads[i];
        if (gi.size() != g.size()) throw std::invalid_argument("reweight_gradient: gradient size mismatch");
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += w * gi[k];
    }
    const double lr_scale = std::pow(sigmas.front(), -2.0 * e);
    return {std::move(g), lr_scale};
}

} // namespace donet
