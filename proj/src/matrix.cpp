#include "gih/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace gih {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const std::vector<double>& values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

bool Matrix::all_finite() const {
    for (double v : d_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : d_) s += v * v;
    return std::sqrt(s);
}

double Matrix::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("matrix add: shape mismatch");
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += other.d_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("matrix sub: shape mismatch");
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= other.d_[i];
    return *this;
}

Matrix& Matrix::operator*=(double c) {
    for (double& v : d_) v *= c;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double c) { return a *= c; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols() != x.size()) throw ShapeError("matvec: dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

Matrix outer(const std::vector<double>& a, const std::vector<double>& b) {
    Matrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

SymMatrix SymMatrix::identity(std::size_t n) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

SymMatrix SymMatrix::diag(const std::vector<double>& values) {
    SymMatrix m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

SymMatrix SymMatrix::from_matrix(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("SymMatrix: matrix is not square");
    if (!a.all_finite()) throw Error("SymMatrix: non-finite entries");
    double tol = 1e-12 * std::max(1.0, a.frobenius_norm());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol)
                throw Error("SymMatrix: asymmetry beyond tolerance");
    return symmetrized(a);
}

SymMatrix SymMatrix::symmetrized(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("SymMatrix: matrix is not square");
    SymMatrix s(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j) s.set_sym(i, j, 0.5 * (a(i, j) + a(j, i)));
    return s;
}

Matrix SymMatrix::to_matrix() const {
    Matrix m(dim_, dim_);
    m.data() = d_;
    return m;
}

bool SymMatrix::all_finite() const {
    for (double v : d_)
        if (!std::isfinite(v)) return false;
    return true;
}

double SymMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : d_) s += v * v;
    return std::sqrt(s);
}

double SymMatrix::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
    return s;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
    if (dim_ != other.dim_) throw ShapeError("symmatrix add: dimension mismatch");
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += other.d_[i];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
    if (dim_ != other.dim_) throw ShapeError("symmatrix sub: dimension mismatch");
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= other.d_[i];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
    for (double& v : d_) v *= c;
    return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(SymMatrix a, double c) { return a *= c; }

std::vector<double> matvec(const SymMatrix& a, const std::vector<double>& x) {
    if (a.dim() != x.size()) throw ShapeError("matvec: dimension mismatch");
    std::vector<double> y(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double* ai = a.data().data() + i * a.dim();
        double s = 0.0;
        for (std::size_t j = 0; j < a.dim(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

SymMatrix sandwich_product(const SymMatrix& a, const SymMatrix& b) {
    Matrix ab = matmul(a.to_matrix(), b.to_matrix());
    Matrix aba = matmul(ab, a.to_matrix());
    return SymMatrix::symmetrized(aba);
}

}  // namespace gih
