#pragma once

#include <optional>

#include "donet/matrix.hpp"

namespace donet {

/// Squared-Frobenius split of ||T B^T - A||_F^2 into the projection part
/// (trunk) and the coefficient part (branch), plus the two branch-error
/// surrogates: eps_c = ||B^T - T^+ A||_F^2 and the bound
/// eps_d = ||T||_2^2 * eps_c.
struct ErrorReport {
    double eps_total = 0.0;
    double eps_trunk = 0.0;
    double eps_branch = 0.0;
    double eps_c = 0.0;
    double eps_d = 0.0;
    // Relative forms delta = sqrt(eps) / ||A||_F.
    double delta_total = 0.0;
    double delta_trunk = 0.0;
    double delta_branch = 0.0;
};

/// Per-mode branch-error breakdown on the scaled SVD trunk. Train fields
/// use targets v_i (unit norm, base loss exactly 1); test fields use the
/// optimal test coefficients w_i with the m_tr/m_te normalization.
struct ModeLossReport {
    std::vector<double> sigma;
    std::vector<double> l_train, weighted_train, base_train;
    std::vector<bool> improved_train;
    std::vector<double> l_test, weighted_test, base_test;
    std::vector<bool> improved_test;
    std::size_t m_tr = 0, m_te = 0;
    bool has_train = false, has_test = false;
    /// Indices i where sigma_i - sigma_{i+1} < 1e-8 (near-degenerate modes
    /// whose ordering is not unique).
    std::vector<std::size_t> degenerate_gaps;
};

ErrorReport decompose(const Matrix& t, const Matrix& b, const Matrix& a);

/// (T^+ A)^T, the Frobenius-optimal branch matrix for trunk t.
Matrix optimal_branch(const Matrix& t, const Matrix& a);

/// Spectral norm via power iteration on t^T t.
double spectral_norm(const Matrix& t);

/// Train-side mode losses: L_i = ||b_i - v_i||^2, weighted sigma_i^2 L_i.
ModeLossReport mode_losses_train(const Matrix& b_train, const Matrix& v1,
                                 const std::vector<double>& sigma1);

/// W1 = (Sigma_1^{-1} Phi_1^T A_te)^T, the optimal test coefficients.
Matrix test_coefficients(const Matrix& phi1, const std::vector<double>& sigma1,
                         const Matrix& a_test);

/// Test-side mode losses: L_{i,te} = (m_tr/m_te) ||b_i - w_i||^2.
ModeLossReport mode_losses_test(const Matrix& b_test, const Matrix& w1, std::size_t m_tr,
                                std::size_t m_te, const std::vector<double>& sigma1);

/// Merge the train fields of one report and the test fields of another.
ModeLossReport merge_mode_reports(const ModeLossReport& train, const ModeLossReport& test);

/// modes.csv rows: i, sigma, L_train, L_test, weighted_train,
/// weighted_test, base_train, base_test.
void save_mode_report(const ModeLossReport& r, const std::string& path);

} // namespace donet
