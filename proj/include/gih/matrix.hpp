#pragma once

#include <cstddef>
#include <vector>

#include "gih/error.hpp"

namespace gih {

// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix diag(const std::vector<double>& values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    double* row(std::size_t i) { return d_.data() + i * cols_; }
    const double* row(std::size_t i) const { return d_.data() + i * cols_; }

    std::vector<double>& data() { return d_; }
    const std::vector<double>& data() const { return d_; }

    bool all_finite() const;
    double frobenius_norm() const;
    double trace() const;
    Matrix transposed() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double c);

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> d_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double c);
Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);
Matrix outer(const std::vector<double>& a, const std::vector<double>& b);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

// Dense symmetric matrix. Construction from a general matrix enforces the
// symmetry tolerance |a_ij - a_ji| <= 1e-12 * max(1, ||A||_F) and finiteness.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim, double fill = 0.0) : dim_(dim), d_(dim * dim, fill) {}

    static SymMatrix identity(std::size_t n);
    static SymMatrix diag(const std::vector<double>& values);
    // Validates symmetry within tolerance, then stores (A + A^T)/2.
    static SymMatrix from_matrix(const Matrix& a);
    // (A + A^T)/2 without the symmetry check; for MC accumulators.
    static SymMatrix symmetrized(const Matrix& a);

    std::size_t dim() const { return dim_; }

    double& operator()(std::size_t i, std::size_t j) { return d_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * dim_ + j]; }

    void set_sym(std::size_t i, std::size_t j, double v) {
        d_[i * dim_ + j] = v;
        d_[j * dim_ + i] = v;
    }

    std::vector<double>& data() { return d_; }
    const std::vector<double>& data() const { return d_; }

    Matrix to_matrix() const;
    bool all_finite() const;
    double frobenius_norm() const;
    double trace() const;

    SymMatrix& operator+=(const SymMatrix& other);
    SymMatrix& operator-=(const SymMatrix& other);
    SymMatrix& operator*=(double c);

private:
    std::size_t dim_ = 0;
    std::vector<double> d_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(SymMatrix a, double c);
std::vector<double> matvec(const SymMatrix& a, const std::vector<double>& x);
// a * b * a for symmetric a, b (result symmetrized against round-off).
SymMatrix sandwich_product(const SymMatrix& a, const SymMatrix& b);

// Eigenvalues descending; eigenvectors are the columns of `vectors`, each with
// its largest-magnitude component positive.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

}  // namespace gih
