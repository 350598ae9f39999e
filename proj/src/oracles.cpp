#include "gih/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "gih/error.hpp"
#include "gih/linalg.hpp"
#include "gih/rng.hpp"
#include "gih/sampling.hpp"

namespace gih::oracle {

ConvIndexMaps ConvIndexMaps::make_1d(int length, int kernel, int stride) {
    if (kernel > length) throw ShapeError("conv maps: kernel larger than input");
    if (kernel < 1 || stride < 1) throw ShapeError("conv maps: invalid geometry");
    ConvIndexMaps maps;
    maps.dim_ = length;
    maps.patch_dim_ = kernel;
    for (int start = 0; start + kernel <= length; start += stride) {
        std::vector<int> coords(kernel);
        for (int k = 0; k < kernel; ++k) coords[k] = start + k;
        maps.coords_.push_back(std::move(coords));
    }
    return maps;
}

ConvIndexMaps ConvIndexMaps::make_2d(int h, int w, int kh, int kw, int stride) {
    if (kh > h || kw > w) throw ShapeError("conv maps: kernel larger than input");
    if (kh < 1 || kw < 1 || stride < 1) throw ShapeError("conv maps: invalid geometry");
    ConvIndexMaps maps;
    maps.dim_ = h * w;
    maps.patch_dim_ = kh * kw;
    for (int sy = 0; sy + kh <= h; sy += stride)
        for (int sx = 0; sx + kw <= w; sx += stride) {
            std::vector<int> coords;
            coords.reserve(kh * kw);
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) coords.push_back((sy + ky) * w + (sx + kx));
            maps.coords_.push_back(std::move(coords));
        }
    return maps;
}

Matrix ConvIndexMaps::m(std::size_t j) const {
    Matrix out(dim_, patch_dim_);
    for (int k = 0; k < patch_dim_; ++k) out(coords_[j][k], k) = 1.0;
    return out;
}

Matrix ConvIndexMaps::overlap(std::size_t j1, std::size_t j2) const {
    Matrix out(dim_, dim_);
    for (int k = 0; k < patch_dim_; ++k) out(coords_[j1][k], coords_[j2][k]) = 1.0;
    return out;
}

std::vector<int> ConvIndexMaps::receptive_counts() const {
    std::vector<int> counts(dim_, 0);
    for (const auto& patch : coords_)
        for (int c : patch) ++counts[c];
    return counts;
}

SymMatrix oracle_mlp_identity(int n, double sigma_phi, double sigma_omega, int dim) {
    if (n < 0 || dim < 1) throw Error("oracle_mlp_identity: bad arguments");
    SymMatrix g(dim);
    double c = sigma_omega * sigma_omega * n * sigma_phi * sigma_phi / 2.0;
    for (int i = 0; i < dim; ++i) g(i, i) = c;
    return g;
}

SymMatrix oracle_convpool_G(const ConvIndexMaps& maps, int n, double sigma_omega,
                            double sigma_phi) {
    const int d = maps.dim();
    const double p = double(maps.n_patches());
    Matrix acc(d, d);
    for (std::size_t j1 = 0; j1 < maps.n_patches(); ++j1)
        for (std::size_t j2 = 0; j2 < maps.n_patches(); ++j2)
            for (int k = 0; k < maps.patch_dim(); ++k)
                acc(maps.patch_coords(j1)[k], maps.patch_coords(j2)[k]) += 1.0;
    acc *= n * sigma_omega * sigma_omega * sigma_phi * sigma_phi / (p * p);
    return SymMatrix::from_matrix(acc);
}

SymMatrix oracle_convpool_G_1d(int length, int kernel, int stride, int n, double sigma_omega,
                               double sigma_phi) {
    return oracle_convpool_G(ConvIndexMaps::make_1d(length, kernel, stride), n, sigma_omega,
                             sigma_phi);
}

SymMatrix oracle_convpool_G_2d(int h, int w, int kernel, int stride, int n, double sigma_omega,
                               double sigma_phi) {
    return oracle_convpool_G(ConvIndexMaps::make_2d(h, w, kernel, kernel, stride), n, sigma_omega,
                             sigma_phi);
}

NormalizedGaussianOracle oracle_lemma_normalized_gaussian(int dim, std::size_t n_samples,
                                                          uint64_t seed) {
    if (dim < 2) throw Error("oracle_lemma_normalized_gaussian: dim must be >= 2");
    NormalizedGaussianOracle out;
    out.analytic = SymMatrix(dim);
    for (int i = 0; i < dim; ++i) out.analytic(i, i) = 1.0 / dim;

    SeededRng rng(seed, 0x40);
    SymMatrix acc(dim);
    std::vector<double> d(dim);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (double& v : d) v = rng.next_gaussian();
        double n2 = dot(d, d);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j <= i; ++j) acc(i, j) += d[i] * d[j] / n2;
    }
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) acc.set_sym(i, j, acc(i, j) / double(n_samples));
    out.mc = std::move(acc);
    return out;
}

SymMatrix oracle_linear_regression_delta(const SymMatrix& s, double sigma_theta) {
    return s * (-2.0 * sigma_theta * sigma_theta);
}

CorollaryBounds verify_corollary_bounds(const ConvIndexMaps& maps,
                                        const std::vector<SymMatrix>& patch_covariances,
                                        std::size_t n_models, uint64_t seed) {
    const std::size_t np = maps.n_patches();
    const int d = maps.patch_dim();
    if (patch_covariances.size() != np)
        throw Error("verify_corollary_bounds: need one covariance per patch");

    std::vector<double> lmin(np), lmax(np);
    std::vector<Matrix> factors(np);
    for (std::size_t j = 0; j < np; ++j) {
        if (int(patch_covariances[j].dim()) != d)
            throw ShapeError("verify_corollary_bounds: covariance dim != patch dim");
        EigenDecomposition eig = sym_eig(patch_covariances[j]);
        lmin[j] = eig.values.back();
        lmax[j] = eig.values.front();
        if (lmin[j] <= 0.0)
            throw NotPositiveDefiniteError("verify_corollary_bounds: patch covariance not SPD");
    }

    // theta ~ N(0, I_d); s_j(theta)^2 = theta^T Sigma_j theta / d. The scale
    // of theta cancels, so the init variance is irrelevant.
    SeededRng rng(seed, 0x41);
    std::vector<double> theta(d);
    std::vector<Matrix> pair_mc(np * np, Matrix(d, d));
    for (std::size_t s = 0; s < n_models; ++s) {
        for (double& v : theta) v = rng.next_gaussian();
        std::vector<double> sj(np);
        for (std::size_t j = 0; j < np; ++j)
            sj[j] = std::sqrt(dot(theta, matvec(patch_covariances[j], theta)) / d);
        for (std::size_t j1 = 0; j1 < np; ++j1)
            for (std::size_t j2 = j1; j2 < np; ++j2) {
                Matrix& acc = pair_mc[j1 * np + j2];
                double w = 1.0 / (sj[j1] * sj[j2]);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) acc(a, b) += w * theta[a] * theta[b];
            }
    }

    CorollaryBounds out;
    out.lower = SymMatrix(maps.dim());
    out.upper = SymMatrix(maps.dim());
    out.mc = SymMatrix(maps.dim());
    out.sandwich_ok = true;
    Matrix lower_acc(maps.dim(), maps.dim()), upper_acc(maps.dim(), maps.dim()),
        mc_acc(maps.dim(), maps.dim());

    for (std::size_t j1 = 0; j1 < np; ++j1)
        for (std::size_t j2 = j1; j2 < np; ++j2) {
            Matrix t = pair_mc[j1 * np + j2];
            t *= 1.0 / double(n_models);
            double c_lo = 1.0 / std::sqrt(lmax[j1] * lmax[j2]);
            double c_hi = 1.0 / std::sqrt(lmin[j1] * lmin[j2]);
            double tol = 1e-2 * c_hi * std::sqrt(double(d));  // 1e-2 * ||upper pair||_F

            SymMatrix tsym = SymMatrix::symmetrized(t);
            SymMatrix hi_gap = tsym * (-1.0);
            SymMatrix lo_gap = tsym;
            for (int a = 0; a < d; ++a) {
                hi_gap(a, a) += c_hi;
                lo_gap(a, a) -= c_lo;
            }
            double hi_min = sym_eig(hi_gap).values.back();
            double lo_min = sym_eig(lo_gap).values.back();
            double violation = std::max(0.0, -std::min(hi_min, lo_min));
            out.max_violation = std::max(out.max_violation, violation / tol);
            if (violation > tol) out.sandwich_ok = false;

            // Aggregate the wrapped overlap-support matrices (both pair orders).
            const auto& c1 = maps.patch_coords(j1);
            const auto& c2 = maps.patch_coords(j2);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    double mid = tsym(a, b);
                    mc_acc(c1[a], c2[b]) += mid;
                    lower_acc(c1[a], c2[b]) += (a == b) ? c_lo : 0.0;
                    upper_acc(c1[a], c2[b]) += (a == b) ? c_hi : 0.0;
                    if (j1 != j2) {
                        mc_acc(c2[a], c1[b]) += mid;
                        lower_acc(c2[a], c1[b]) += (a == b) ? c_lo : 0.0;
                        upper_acc(c2[a], c1[b]) += (a == b) ? c_hi : 0.0;
                    }
                }
        }
    out.lower = SymMatrix::symmetrized(lower_acc);
    out.upper = SymMatrix::symmetrized(upper_acc);
    out.mc = SymMatrix::symmetrized(mc_acc);
    return out;
}

AppendixExample oracle_appendix_example(double sigma_theta) {
    if (sigma_theta <= 0.0) throw Error("oracle_appendix_example: sigma must be positive");
    double c = sigma_theta * sigma_theta / 2.0;
    AppendixExample ex;
    ex.g = SymMatrix(3);
    const double bracket[3][3] = {{1, 1, 0}, {1, 2, 1}, {0, 1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ex.g(i, j) = c * bracket[i][j];
    ex.values = {3.0 * c, 1.0 * c, 0.0};
    ex.vectors = Matrix(3, 3);
    const double dirs[3][3] = {{1, 2, 1}, {1, 0, -1}, {1, -1, 1}};
    for (int k = 0; k < 3; ++k) {
        double n = std::sqrt(dirs[k][0] * dirs[k][0] + dirs[k][1] * dirs[k][1] +
                             dirs[k][2] * dirs[k][2]);
        for (int i = 0; i < 3; ++i) ex.vectors(i, k) = dirs[k][i] / n;
    }
    return ex;
}

}  // namespace gih::oracle
