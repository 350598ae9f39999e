#pragma once

#include <vector>

#include "gih/matrix.hpp"
#include "gih/rng.hpp"

namespace gih {

// Precomputed factor F with F F^T = cov, for drawing x = F z, z ~ N(0, I).
// Uses Cholesky when the covariance is positive definite, otherwise an
// eigendecomposition with eigenvalues in [-1e-8*lambda_max, 0) clipped to
// zero. Eigenvalues below the clip band raise NotPsdError.
class CovSampler {
public:
    explicit CovSampler(const SymMatrix& cov);

    std::size_t dim() const { return factor_.rows(); }
    std::vector<double> sample(SeededRng& rng) const;

private:
    Matrix factor_;
};

// n draws from N(0, cov), one per row.
Matrix gaussian_sample(SeededRng rng, const SymMatrix& cov, std::size_t n);

// n draws from N(0, sigma^2 I_dim), one per row.
Matrix gaussian_sample(SeededRng rng, double sigma, std::size_t dim, std::size_t n);

std::vector<double> gaussian_vector(SeededRng& rng, std::size_t dim, double sigma = 1.0);

}  // namespace gih
