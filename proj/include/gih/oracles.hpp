#pragma once

#include <cstdint>
#include <vector>

#include "gih/matrix.hpp"

namespace gih::oracle {

// Patch-extraction operators of a convolution: M_j is the D x patch_dim
// binary matrix whose columns pick the input coordinates of patch j, so
// M_j^T x is the j-th patch. overlap(j1, j2) = M_{j1} M_{j2}^T is binary with
// at most one 1 per row and column; it is diagonal exactly when j1 == j2.
class ConvIndexMaps {
public:
    static ConvIndexMaps make_1d(int length, int kernel, int stride = 1);
    static ConvIndexMaps make_2d(int h, int w, int kh, int kw, int stride = 1);

    int dim() const { return dim_; }
    int patch_dim() const { return patch_dim_; }
    std::size_t n_patches() const { return coords_.size(); }
    const std::vector<int>& patch_coords(std::size_t j) const { return coords_[j]; }

    Matrix m(std::size_t j) const;                           // D x patch_dim
    Matrix overlap(std::size_t j1, std::size_t j2) const;    // M_{j1} M_{j2}^T
    std::vector<int> receptive_counts() const;               // coverage per coordinate

private:
    int dim_ = 0, patch_dim_ = 0;
    std::vector<std::vector<int>> coords_;
};

// G for a 2-layer bias-free ReLU MLP: sigma_omega^2 * (n sigma_phi^2 / 2) * I.
SymMatrix oracle_mlp_identity(int n, double sigma_phi, double sigma_omega, int dim);

// G for the linear conv + global-average-pool model:
// (n sigma_omega^2 sigma_phi^2 / P^2) * sum_{j1,j2} M_{j1} M_{j2}^T.
SymMatrix oracle_convpool_G(const ConvIndexMaps& maps, int n, double sigma_omega,
                            double sigma_phi);
SymMatrix oracle_convpool_G_1d(int length, int kernel, int stride, int n, double sigma_omega,
                               double sigma_phi);
SymMatrix oracle_convpool_G_2d(int h, int w, int kernel, int stride, int n, double sigma_omega,
                               double sigma_phi);

// E[dd^T / ||d||^2] for standard Gaussian d: exactly I/D, plus its MC estimate.
struct NormalizedGaussianOracle {
    SymMatrix analytic;
    SymMatrix mc;
};
NormalizedGaussianOracle oracle_lemma_normalized_gaussian(int dim, std::size_t n_samples,
                                                          uint64_t seed);

// Evolution of linear regression under SSE gradient flow: -2 sigma_theta^2 S.
SymMatrix oracle_linear_regression_delta(const SymMatrix& s, double sigma_theta);

// Patch-normalized linear conv-pool model: per-pair terms
// E[theta theta^T / (s_{j1}(theta) s_{j2}(theta))] with
// s_j(theta) = sqrt(theta^T Sigma_j theta / d) are sandwiched between
// (1/sqrt(lmax_{j1} lmax_{j2})) I and (1/sqrt(lmin_{j1} lmin_{j2})) I. The
// check runs per pair in patch space; lower/upper/mc aggregate the wrapped
// overlap-support matrices over all pairs.
struct CorollaryBounds {
    SymMatrix lower, upper, mc;
    bool sandwich_ok = false;
    double max_violation = 0.0;  // worst eigenvalue excursion, relative to the pair tolerance
};
CorollaryBounds verify_corollary_bounds(const ConvIndexMaps& maps,
                                        const std::vector<SymMatrix>& patch_covariances,
                                        std::size_t n_models, uint64_t seed);

// The worked 3-D conv+pool example: g = (sigma_theta^2/2) * [[1,1,0],[1,2,1],[0,1,1]]
// with eigenvalues (sigma_theta^2/2) * {3,1,0} and eigenvectors along
// [1,2,1], [1,0,-1], [1,-1,1] (unit, largest-magnitude component positive).
struct AppendixExample {
    SymMatrix g;
    std::vector<double> values;
    Matrix vectors;  // columns
};
AppendixExample oracle_appendix_example(double sigma_theta);

}  // namespace gih::oracle
