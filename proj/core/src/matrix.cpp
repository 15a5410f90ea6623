#include "donet/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace donet {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
    std::vector<double> v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_column(std::size_t j, const std::vector<double>& v) {
    if (v.size() != rows_) throw std::invalid_argument("set_column: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

double Matrix::frobenius_sq() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
}

double Matrix::frobenius_norm() const { return std::sqrt(frobenius_sq()); }

Matrix& Matrix::operator+=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix +=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix -=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double c) {
    for (double& x : data_) x *= c;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { a += b; return a; }
Matrix operator-(Matrix a, const Matrix& b) { a -= b; return a; }
Matrix operator*(Matrix a, double c) { a *= c; return a; }

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b.row(p);
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("multiply_at_b: row counts differ");
    Matrix c(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t p = 0; p < n; ++p) {
        const double* ap = a.row(p);
        const double* bp = b.row(p);
        for (std::size_t i = 0; i < k; ++i) {
            const double aip = ap[i];
            if (aip == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

Matrix multiply_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("multiply_a_bt: column counts differ");
    Matrix c(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::string to_csv(const Matrix& m) {
    std::string out;
    out.reserve(m.size() * 20 + 32);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%zu,%zu\n", m.rows(), m.cols());
    out += buf;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out += buf;
            out += (j + 1 == m.cols()) ? '\n' : ',';
        }
        if (m.cols() == 0) out += '\n';
    }
    return out;
}

void save_csv(const Matrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_csv: cannot open " + path);
    f << to_csv(m);
}

Matrix from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("from_csv: empty input");
    std::size_t rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu", &rows, &cols) != 2)
        throw std::runtime_error("from_csv: bad header line: " + line);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("from_csv: truncated input");
        const char* p = line.c_str();
        for (std::size_t j = 0; j < cols; ++j) {
            char* end = nullptr;
            m(i, j) = std::strtod(p, &end);
            if (end == p) throw std::runtime_error("from_csv: bad value in row " + std::to_string(i));
            p = end;
            if (*p == ',') ++p;
        }
    }
    return m;
}

Matrix load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_csv(ss.str());
}

} // namespace donet
