#include "donet/errdecomp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "donet/svd.hpp"

namespace donet {

ErrorReport decompose(const Matrix& t, const Matrix& b, const Matrix& a) {
    if (t.rows() != a.rows()) throw std::invalid_argument("decompose: t/a row mismatch");
    if (b.rows() != a.cols()) throw std::invalid_argument("decompose: b rows != a cols");
    if (b.cols() != t.cols()) throw std::invalid_argument("decompose: b/t mode count mismatch");

    ErrorReport r;
    const Matrix tplus = pseudoinverse(t);
    const Matrix opt = multiply(tplus, a); // T^+ A, N x m
    Matrix cdiff = b.transposed();         // B^T - T^+ A
    cdiff -= opt;
    r.eps_c = cdiff.frobenius_sq();
    r.eps_branch = multiply(t, cdiff).frobenius_sq();
    r.eps_trunk = projection_error(t, a);
    const double tnorm = spectral_norm(t);
    r.eps_d = tnorm * tnorm * r.eps_c;
    Matrix resid = multiply_a_bt(t, b);
    resid -= a;
    r.eps_total = resid.frobenius_sq();

    const double anorm = a.frobenius_norm();
    if (anorm > 0.0) {
        r.delta_total = std::sqrt(r.eps_total) / anorm;
        r.delta_trunk = std::sqrt(r.eps_trunk) / anorm;
        r.delta_branch = std::sqrt(r.eps_branch) / anorm;
    }
    return r;
}

Matrix optimal_branch(const Matrix& t, const Matrix& a) {
    if (t.rows() != a.rows()) throw std::invalid_argument("optimal_branch: row mismatch");
    return multiply(pseudoinverse(t), a).transposed();
}

double spectral_norm(const Matrix& t) {
    if (t.cols() == 0 || t.rows() == 0) return 0.0;
    const Matrix g = multiply_at_b(t, t);
    const std::size_t n = g.rows();
    std::vector<double> x(n, 1.0 / std::sqrt(double(n)));
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* gi = g.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gi[j] * x[j];
            y[i] = s;
        }
        const double nrm = norm2(y);
        if (nrm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) y[i] /= nrm;
        const double prev = lambda;
        lambda = nrm;
        x = std::move(y);
        if (it > 0 && std::abs(lambda - prev) <= 1e-10 * std::max(1.0, lambda)) break;
    }
    return std::sqrt(lambda);
}

namespace {

void flag_degenerate(ModeLossReport& r) {
    r.degenerate_gaps.clear();
    for (std::size_t i = 0; i + 1 < r.sigma.size(); ++i)
        if (r.sigma[i] - r.sigma[i + 1] < 1e-8) r.degenerate_gaps.push_back(i);
}

} // namespace

ModeLossReport mode_losses_train(const Matrix& b_train, const Matrix& v1,
                                 const std::vector<double>& sigma1) {
    const std::size_t n_modes = sigma1.size();
    if (b_train.cols() != n_modes || v1.cols() != n_modes)
        throw std::invalid_argument("mode_losses_train: mode count mismatch");
    if (b_train.rows() != v1.rows())
        throw std::invalid_argument("mode_losses_train: sample count mismatch");

    ModeLossReport r;
    r.sigma = sigma1;
    r.m_tr = b_train.rows();
    r.has_train = true;
    r.l_train.resize(n_modes);
    r.weighted_train.resize(n_modes);
    r.base_train.assign(n_modes, 1.0);
    r.improved_train.resize(n_modes);
    for (std::size_t i = 0; i < n_modes; ++i) {
        double l = 0.0;
        for (std::size_t j = 0; j < b_train.rows(); ++j) {
            const double d = b_train(j, i) - v1(j, i);
            l += d * d;
        }
        r.l_train[i] = l;
        r.weighted_train[i] = sigma1[i] * sigma1[i] * l;
        r.improved_train[i] = l < 1.0;
    }
    flag_degenerate(r);
    return r;
}

Matrix test_coefficients(const Matrix& phi1, const std::vector<double>& sigma1,
                         const Matrix& a_test) {
    if (phi1.cols() != sigma1.size())
        throw std::invalid_argument("test_coefficients: phi1/sigma1 mismatch");
    if (phi1.rows() != a_test.rows())
        throw std::invalid_argument("test_coefficients: grid size mismatch");
    const double tol = 1e-300;
    for (double s : sigma1)
        if (!(s > tol))
            throw std::invalid_argument("test_coefficients: singular value too small to invert");
    Matrix w = multiply_at_b(phi1, a_test); // N x m_te
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double inv = 1.0 / sigma1[i];
        double* row = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) row[j] *= inv;
    }
    return w.transposed();
}

ModeLossReport mode_losses_test(const Matrix& b_test, const Matrix& w1, std::size_t m_tr,
                                std::size_t m_te, const std::vector<double>& sigma1) {
    if (m_te == 0) throw std::invalid_argument("mode_losses_test: m_te is zero");
    const std::size_t n_modes = sigma1.size();
    if (b_test.cols() != n_modes || w1.cols() != n_modes)
        throw std::invalid_argument("mode_losses_test: mode count mismatch");
    if (b_test.rows() != w1.rows() || b_test.rows() != m_te)
        throw std::invalid_argument("mode_losses_test: sample count mismatch");

    ModeLossReport r;
    r.sigma = sigma1;
    r.m_tr = m_tr;
    r.m_te = m_te;
    r.has_test = true;
    r.l_test.resize(n_modes);
    r.weighted_test.resize(n_modes);
    r.base_test.resize(n_modes);
    r.improved_test.resize(n_modes);
    const double norm = double(m_tr) / double(m_te);
    for (std::size_t i = 0; i < n_modes; ++i) {
        double l = 0.0, base = 0.0;
        for (std::size_t j = 0; j < m_te; ++j) {
            const double d = b_test(j, i) - w1(j, i);
            l += d * d;
            base += w1(j, i) * w1(j, i);
        }
        r.l_test[i] = norm * l;
        r.base_test[i] = norm * base;
        r.weighted_test[i] = sigma1[i] * sigma1[i] * r.l_test[i];
        r.improved_test[i] = r.l_test[i] < r.base_test[i];
    }
    flag_degenerate(r);
    return r;
}

ModeLossReport merge_mode_reports(const ModeLossReport& train, const ModeLossReport& test) {
    if (train.sigma != test.sigma)
        throw std::invalid_argument("merge_mode_reports: sigma vectors differ");
    ModeLossReport r = train;
    r.l_test = test.l_test;
    r.weighted_test = test.weighted_test;
    r.base_test = test.base_test;
    r.improved_test = test.improved_test;
    r.m_te = test.m_te;
    r.has_test = test.has_test;
    return r;
}

void save_mode_report(const ModeLossReport& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_mode_report: cannot open " + path);
    f << "i,sigma,L_train,L_test,weighted_train,weighted_test,base_train,base_test\n";
    char buf[256];
    auto at = [](const std::vector<double>& v, std::size_t i) {
        return i < v.size() ? v[i] : std::nan("");
    };
    for (std::size_t i = 0; i < r.sigma.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                      r.sigma[i], at(r.l_train, i), at(r.l_test, i), at(r.weighted_train, i),
                      at(r.weighted_test, i), at(r.base_train, i), at(r.base_test, i));
        f << buf;
    }
}

} // namespace donet
