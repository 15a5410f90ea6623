#include "donet/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace donet {

namespace {

struct JacobiResult {
    Matrix w;              // n x m, columns orthogonal, norms = singular values
    Matrix v;              // m x m, accumulated rotations
};

// One-sided Jacobi on the columns of w (requires rows >= cols for full
// accuracy; the caller transposes otherwise).
JacobiResult one_sided_jacobi(Matrix w) {
    const std::size_t n = w.rows(), m = w.cols();
    Matrix v = Matrix::identity(m);
    if (m < 2) return {std::move(w), std::move(v)};

    // Column-major working copy: rotations touch whole columns.
    std::vector<double> col(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) col[j * n + i] = w(i, j);
    std::vector<double> vcol(m * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) vcol[j * m + j] = 1.0;

    const double conv = 1e-15;
    const int max_sweeps = 60;
    std::vector<double> sq(m);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            const double* cj = &col[j * n];
            for (std::size_t i = 0; i < n; ++i) s += cj[i] * cj[i];
            sq[j] = s;
        }
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double* cp = &col[p * n];
                double* cq = &col[q * n];
                double g = 0.0;
                for (std::size_t i = 0; i < n; ++i) g += cp[i] * cq[i];
                const double alpha = sq[p], beta = sq[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(g) <= conv * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double tau = (beta - alpha) / (2.0 * g);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = cp[i], b = cq[i];
                    cp[i] = c * a - s * b;
                    cq[i] = s * a + c * b;
                }
                double* vp = &vcol[p * m];
                double* vq = &vcol[q * m];
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = vp[i], b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
                sq[p] = alpha - t * g;
                sq[q] = beta + t * g;
            }
        }
        if (!rotated) break;
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) w(i, j) = col[j * n + i];
    Matrix vm(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) vm(i, j) = vcol[j * m + i];
    return {std::move(w), std::move(vm)};
}

// Replace (near-)zero columns of u by vectors orthonormal to the rest, so
// u always has orthonormal columns even for rank-deficient input.
void complete_orthonormal(Matrix& u, std::vector<bool>& needs_fill) {
    const std::size_t n = u.rows(), r = u.cols();
    for (std::size_t j = 0; j < r; ++j) {
        if (!needs_fill[j]) continue;
        std::vector<double> cand;
        double best = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> e(n, 0.0);
            e[k] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < r; ++c) {
                    if (c != j && needs_fill[c]) continue;
                    if (c == j) continue;
                    double d = 0.0;
                    for (std::size_t i = 0; i < n; ++i) d += e[i] * u(i, c);
                    for (std::size_t i = 0; i < n; ++i) e[i] -= d * u(i, c);
                }
            }
            const double nrm = norm2(e);
            if (nrm > best) {
                best = nrm;
                cand = std::move(e);
            }
            if (best > 0.5) break;
        }
        const double nrm = norm2(cand);
        for (std::size_t i = 0; i < n; ++i) u(i, j) = cand[i] / nrm;
        needs_fill[j] = false;
    }
}

} // namespace

SvdFactors svd(const Matrix& a) {
    if (!a.all_finite()) throw std::invalid_argument("svd: non-finite input");
    const std::size_t n = a.rows(), m = a.cols();
    const std::size_t r = std::min(n, m);
    if (r == 0) return {Matrix(n, 0), {}, Matrix(m, 0)};

    const bool transposed = n < m;
    JacobiResult jr = one_sided_jacobi(transposed ? a.transposed() : a);
    const std::size_t wn = jr.w.rows(); // = max(n, m)

    std::vector<double> s(r);
    std::vector<std::size_t> order(r);
    for (std::size_t j = 0; j < r; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < wn; ++i) ss += jr.w(i, j) * jr.w(i, j);
        s[j] = std::sqrt(ss);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s[i] > s[j]; });

    Matrix big(wn, r);  // normalized Jacobi columns (the U of the worked-on matrix)
    Matrix small(r, r); // rows of the accumulated rotation matrix
    std::vector<double> s_sorted(r);
    std::vector<bool> needs_fill(r, false);
    const double tiny = std::numeric_limits<double>::min();
    for (std::size_t j = 0; j < r; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = s[src];
        if (s[src] <= tiny) {
            needs_fill[j] = true;
        } else {
            for (std::size_t i = 0; i < wn; ++i) big(i, j) = jr.w(i, src) / s[src];
        }
        for (std::size_t i = 0; i < r; ++i) small(i, j) = jr.v(i, src);
    }
    complete_orthonormal(big, needs_fill);

    SvdFactors f;
    f.s = std::move(s_sorted);
    if (transposed) {
        f.u = std::move(small);
        f.v = std::move(big);
    } else {
        f.u = std::move(big);
        f.v = std::move(small);
    }

    // Sign convention: largest-magnitude entry of each u column non-negative.
    for (std::size_t j = 0; j < r; ++j) {
        std::size_t arg = 0;
        double mx = -1.0;
        for (std::size_t i = 0; i < f.u.rows(); ++i) {
            const double v = std::abs(f.u(i, j));
            if (v > mx) {
                mx = v;
                arg = i;
            }
        }
        if (f.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < f.u.rows(); ++i) f.u(i, j) = -f.u(i, j);
            for (std::size_t i = 0; i < f.v.rows(); ++i) f.v(i, j) = -f.v(i, j);
        }
    }
    return f;
}

Matrix reconstruct(const SvdFactors& f) {
    Matrix us = f.u;
    for (std::size_t j = 0; j < f.s.size(); ++j)
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= f.s[j];
    return multiply_a_bt(us, f.v);
}

double default_rank_tol(const SvdFactors& f, std::size_t rows, std::size_t cols) {
    const double s1 = f.s.empty() ? 0.0 : f.s.front();
    return std::numeric_limits<double>::epsilon() * double(std::max(rows, cols)) * s1;
}

std::size_t numerical_rank(const Matrix& a, double tol) {
    const SvdFactors f = svd(a);
    if (tol < 0.0) tol = default_rank_tol(f, a.rows(), a.cols());
    std::size_t r = 0;
    for (double s : f.s)
        if (s > tol) ++r;
    return r;
}

Matrix pseudoinverse(const Matrix& t, double tol) {
    const SvdFactors f = svd(t);
    if (tol < 0.0) tol = default_rank_tol(f, t.rows(), t.cols());
    // pinv = v * diag(1/s) * u^T, keeping only s > tol.
    Matrix vs = f.v;
    for (std::size_t j = 0; j < f.s.size(); ++j) {
        const double inv = f.s[j] > tol ? 1.0 / f.s[j] : 0.0;
        for (std::size_t i = 0; i < vs.rows(); ++i) vs(i, j) *= inv;
    }
    return multiply_a_bt(vs, f.u);
}

double projection_error(const Matrix& t, const Matrix& a) {
    if (t.rows() != a.rows()) throw std::invalid_argument("projection_error: row counts differ");
    const SvdFactors f = svd(t);
    const double tol = default_rank_tol(f, t.rows(), t.cols());
    std::size_t rank = 0;
    for (double s : f.s)
        if (s > tol) ++rank;
    // Residual a - U_r (U_r^T a) with U_r the range basis of t.
    Matrix ur(t.rows(), rank);
    for (std::size_t j = 0; j < rank; ++j)
        for (std::size_t i = 0; i < t.rows(); ++i) ur(i, j) = f.u(i, j);
    const Matrix coeff = multiply_at_b(ur, a);
    Matrix res = a;
    res -= multiply(ur, coeff);
    return res.frobenius_sq();
}

SvdSplit truncate(const SvdFactors& f, std::size_t n_keep) {
    const std::size_t r = f.s.size();
    if (n_keep > r) throw std::invalid_argument("truncate: n_keep exceeds rank of the factorization");
    SvdSplit out;
    const std::size_t n = f.u.rows(), m = f.v.rows();
    out.phi1 = Matrix(n, n_keep);
    out.v1 = Matrix(m, n_keep);
    out.phi2 = Matrix(n, r - n_keep);
    out.v2 = Matrix(m, r - n_keep);
    out.sigma1.assign(f.s.begin(), f.s.begin() + n_keep);
    out.sigma2.assign(f.s.begin() + n_keep, f.s.end());
    for (std::size_t j = 0; j < n_keep; ++j) {
        for (std::size_t i = 0; i < n; ++i) out.phi1(i, j) = f.u(i, j);
        for (std::size_t i = 0; i < m; ++i) out.v1(i, j) = f.v(i, j);
    }
    for (std::size_t j = n_keep; j < r; ++j) {
        for (std::size_t i = 0; i < n; ++i) out.phi2(i, j - n_keep) = f.u(i, j);
        for (std::size_t i = 0; i < m; ++i) out.v2(i, j - n_keep) = f.v(i, j);
    }
    return out;
}

} // namespace donet
