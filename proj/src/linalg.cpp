#include "gih/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gih {

namespace {

double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

void fix_sign(Matrix& vectors, std::size_t col) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        double v = std::abs(vectors(i, col));
        if (v > best_abs) {
            best_abs = v;
            best = i;
        }
    }
    if (vectors(best, col) < 0.0)
        for (std::size_t i = 0; i < vectors.rows(); ++i) vectors(i, col) = -vectors(i, col);
}

}  // namespace

EigenDecomposition sym_eig(const SymMatrix& input) {
    if (input.dim() == 0) throw ShapeError("sym_eig: empty matrix");
    if (!input.all_finite()) throw Error("sym_eig: non-finite entries");
    const std::size_t n = input.dim();

    Matrix a = input.to_matrix();
    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, a.frobenius_norm());
    const double tol = 1e-14 * scale;
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (offdiag_norm(a) <= tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double app = a(p, p), aqq = a(q, q);
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                // Rows p and q of A (contiguous).
                double* rp = a.row(p);
                double* rq = a.row(q);
                for (std::size_t j = 0; j < n; ++j) {
                    double x = rp[j], y = rq[j];
                    rp[j] = c * x - s * y;
                    rq[j] = s * x + c * y;
                }
                // Columns p and q of A.
                for (std::size_t i = 0; i < n; ++i) {
                    double* ri = a.row(i);
                    double x = ri[p], y = ri[q];
                    ri[p] = c * x - s * y;
                    ri[q] = s * x + c * y;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                // Accumulate rotations into the eigenvector columns.
                for (std::size_t i = 0; i < n; ++i) {
                    double* ri = v.row(i);
                    double x = ri[p], y = ri[q];
                    ri[p] = c * x - s * y;
                    ri[q] = s * x + c * y;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
        fix_sign(out.vectors, k);
    }
    return out;
}

Matrix cholesky(const SymMatrix& a) {
    const std::size_t n = a.dim();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) throw NotPositiveDefiniteError("cholesky: non-positive pivot");
        double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

std::vector<double> solve_lower(const Matrix& l, const std::vector<double>& b) {
    const std::size_t n = l.rows();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

std::vector<double> solve_lower_transposed(const Matrix& l, const std::vector<double>& b) {
    const std::size_t n = l.rows();
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

std::vector<std::vector<double>> gram_schmidt(const std::vector<std::vector<double>>& vectors,
                                              double drop_tol) {
    std::vector<std::vector<double>> basis;
    for (const auto& input : vectors) {
        std::vector<double> v = input;
        // Two projection passes for numerical orthogonality.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                double c = dot(v, b);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
            }
        double nrm = norm2(v);
        if (nrm < drop_tol) continue;
        for (double& x : v) x /= nrm;
        basis.push_back(std::move(v));
    }
    return basis;
}

namespace {
double frobenius_corr_impl(const std::vector<double>& a, const std::vector<double>& b) {
    double na = 0.0, nb = 0.0, ip = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
        ip += a[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw UndefinedCorrelationError("frobenius_corr: zero matrix");
    double c = ip / std::sqrt(na * nb);
    return std::clamp(c, -1.0, 1.0);
}
}  // namespace

double frobenius_corr(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("frobenius_corr: shape mismatch");
    return frobenius_corr_impl(a.data(), b.data());
}

double frobenius_corr(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw ShapeError("frobenius_corr: shape mismatch");
    return frobenius_corr_impl(a.data(), b.data());
}

}  // namespace gih
