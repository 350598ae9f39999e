#include "gih/sampling.hpp"

#include <cmath>
#include <limits>

#include "gih/linalg.hpp"

namespace gih {

CovSampler::CovSampler(const SymMatrix& cov) {
    // Cholesky only when safely positive definite: a pivot near rounding noise
    // means a numerically singular matrix, where the factor smears spurious
    // mass into the null space. Those fall through to the clipped-eig path.
    try {
        Matrix l = cholesky(cov);
        double max_diag = 0.0, min_pivot = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cov.dim(); ++i) {
            max_diag = std::max(max_diag, cov(i, i));
            min_pivot = std::min(min_pivot, l(i, i) * l(i, i));
        }
        if (min_pivot > 1e-10 * max_diag) {
            factor_ = std::move(l);
            return;
        }
    } catch (const NotPositiveDefiniteError&) {
        // PSD-up-to-noise path below.
    }
    EigenDecomposition eig = sym_eig(cov);
    double lmax = 0.0;
    for (double v : eig.values) lmax = std::max(lmax, v);
    double clip = -1e-8 * std::max(lmax, 0.0);
    std::vector<double> roots(eig.values.size());
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
        double v = eig.values[i];
        if (v < clip) throw NotPsdError("gaussian_sample: covariance not PSD within tolerance");
        // Eigenvalues at rounding scale are zero modes of a singular input;
        // square roots would smear noise into the null space.
        roots[i] = v > 1e-12 * lmax ? std::sqrt(v) : 0.0;
    }
    factor_ = eig.vectors;
    for (std::size_t i = 0; i < factor_.rows(); ++i)
        for (std::size_t j = 0; j < factor_.cols(); ++j) factor_(i, j) *= roots[j];
}

std::vector<double> CovSampler::sample(SeededRng& rng) const {
    std::vector<double> z(dim());
    for (double& v : z) v = rng.next_gaussian();
    return matvec(factor_, z);
}

Matrix gaussian_sample(SeededRng rng, const SymMatrix& cov, std::size_t n) {
    CovSampler sampler(cov);
    Matrix out(n, cov.dim());
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = sampler.sample(rng);
        for (std::size_t j = 0; j < cov.dim(); ++j) out(i, j) = x[j];
    }
    return out;
}

Matrix gaussian_sample(SeededRng rng, double sigma, std::size_t dim, std::size_t n) {
    Matrix out(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) out(i, j) = sigma * rng.next_gaussian();
    return out;
}

std::vector<double> gaussian_vector(SeededRng& rng, std::size_t dim, double sigma) {
    std::vector<double> v(dim);
    for (double& x : v) x = sigma * rng.next_gaussian();
    return v;
}

}  // namespace gih
