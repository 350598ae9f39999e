#pragma once

#include <vector>

#include "gih/matrix.hpp"

namespace gih {

// Cyclic Jacobi eigendecomposition for symmetric matrices. Eigenvalues are
// returned descending; each eigenvector column is oriented so its
// largest-magnitude component is positive. Reconstruction error is
// <= 1e-8 relative for well-scaled inputs up to a few thousand dimensions.
EigenDecomposition sym_eig(const SymMatrix& a);

// Lower-triangular L with L*L^T = a. Throws NotPositiveDefiniteError on a
// non-positive pivot.
Matrix cholesky(const SymMatrix& a);

// Solves L y = b (forward) and L^T x = y (backward) for triangular L.
std::vector<double> solve_lower(const Matrix& l, const std::vector<double>& b);
std::vector<double> solve_lower_transposed(const Matrix& l, const std::vector<double>& b);

// Orthonormalizes `vectors` in order, dropping any vector whose residual norm
// after projection onto the accepted span is below drop_tol.
std::vector<std::vector<double>> gram_schmidt(const std::vector<std::vector<double>>& vectors,
                                              double drop_tol);

// tr(a^T b) / (||a||_F ||b||_F), clamped to [-1, 1].
double frobenius_corr(const Matrix& a, const Matrix& b);
double frobenius_corr(const SymMatrix& a, const SymMatrix& b);

}  // namespace gih
