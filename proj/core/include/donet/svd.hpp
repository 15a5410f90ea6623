#pragma once

#include "donet/matrix.hpp"

namespace donet {

/// Thin SVD a = u * diag(s) * v^T with r = min(rows, cols) triples.
///
/// Conventions: s descending and non-negative; u, v have orthonormal
/// columns; in each column of u the entry of largest magnitude is
/// non-negative (first such entry on ties).
struct SvdFactors {
    Matrix u;              // n x r
    std::vector<double> s; // length r, descending
    Matrix v;              // m x r
};

/// Column partition of an SVD into the leading n_keep triples and the rest.
struct SvdSplit {
    Matrix phi1;
    std::vector<double> sigma1;
    Matrix v1;
    Matrix phi2;
    std::vector<double> sigma2;
    Matrix v2;
};

/// One-sided Jacobi SVD. Accurate and deterministic for the small dense
/// matrices used here (up to a few hundred rows/columns).
SvdFactors svd(const Matrix& a);

/// Reconstruct u * diag(s) * v^T.
Matrix reconstruct(const SvdFactors& f);

/// Default rank cutoff: machine-eps * max(rows, cols) * s_1.
double default_rank_tol(const SvdFactors& f, std::size_t rows, std::size_t cols);

/// Number of singular values above the default (or given) cutoff.
std::size_t numerical_rank(const Matrix& a, double tol = -1.0);

/// Moore-Penrose pseudoinverse; singular values below tol are treated as
/// zero. tol < 0 selects the default cutoff.
Matrix pseudoinverse(const Matrix& t, double tol = -1.0);

/// ||(I - t t^+) a||_F^2, the squared residual of projecting the columns
/// of a onto span(t).
double projection_error(const Matrix& t, const Matrix& a);

/// Split the factors after the first n_keep triples. Pure bookkeeping.
SvdSplit truncate(const SvdFactors& f, std::size_t n_keep);

} // namespace donet
