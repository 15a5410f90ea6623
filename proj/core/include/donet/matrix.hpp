#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace donet {

/// Dense real matrix, row-major. Rows index spatial points (or output
/// dimensions), columns index samples (or modes).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double> column(std::size_t j) const;
    void set_column(std::size_t j, const std::vector<double>& v);

    Matrix transposed() const;
    bool all_finite() const;

    double frobenius_sq() const;
    double frobenius_norm() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double c);

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double c);

/// C = A * B.
Matrix multiply(const Matrix& a, const Matrix& b);
/// C = A^T * B without forming the transpose.
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
/// C = A * B^T without forming the transpose.
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

/// CSV format: first line `rows,cols`, then one comma-separated row per
/// line; values printed with 17 significant digits so round trips are exact.
void save_csv(const Matrix& m, const std::string& path);
Matrix load_csv(const std::string& path);
std::string to_csv(const Matrix& m);
Matrix from_csv(const std::string& text);

} // namespace donet
