#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dppfl::linalg {

/// Small dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
/// Rows/columns listed in idx, in order.
Matrix principal_submatrix(const Matrix& a, std::span<const std::size_t> idx);

/// Determinant by LU with partial pivoting; det of a 0x0 matrix is 1.
double determinant(const Matrix& a);

/// Largest |a_ij - a_ji|.
double asymmetry(const Matrix& a);

struct EigenDecomposition {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column i pairs with values[i]; orthonormal
};

struct EighOptions {
    double tolerance = 1e-14;     // stop when off-diagonal Frobenius norm < tolerance * max(1, ||A||_F)
    int max_sweeps = 100;
    double symmetry_tolerance = 1e-10;
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix with a fixed
/// (row-major, upper-triangle) rotation order. Throws ValueError for a
/// non-symmetric input and NumericError if it fails to converge.
EigenDecomposition eigh(const Matrix& a, const EighOptions& options = {});

}  // namespace dppfl::linalg
