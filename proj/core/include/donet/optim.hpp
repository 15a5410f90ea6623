#pragma once

#include <string>
#include <vector>

namespace donet {

enum class OptimizerKind { GD, Adam, AdaGrad };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double alpha1 = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double eps_bar = 0.0;
};

/// Exponentially decaying schedule: 0.95^floor(t/500) * alpha1.
/// The first update uses t = 1.
double lr_at(std::size_t t, double alpha1);

/// Single-run optimizer state over a flat parameter vector.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    /// Applies one update in place. lr_scale multiplies the scheduled rate
    /// (used for the sigma_1^{-2e} re-weighting compensation).
    void step(std::vector<double>& theta, const std::vector<double>& grad, double lr_scale = 1.0);

    std::size_t t() const { return t_; }
    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    std::size_t t_ = 0;
    std::vector<double> m_; // Adam first moment
    std::vector<double> v_; // Adam second moment
    std::vector<double> g_; // AdaGrad accumulator
};

/// Re-weighted gradient of the modified loss (1/(n m_tr)) sum_i
/// sigma_i^{2+2e} grad L_i, plus the compensating learning-rate scale
/// sigma_1^{-2e}. mode_grads are flat per-mode gradients.
std::pair<std::vector<double>, double> reweight_gradient(
    const std::vector<std::vector<double>>& mode_grads,
    const std::vector<double>& sigmas, double e, std::size_t n, std::size_t m_tr);

} // namespace donet
