#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gih/matrix.hpp"
#include "gih/nn.hpp"
#include "gih/rng.hpp"

namespace gih::data {

struct DatasetMeta {
    std::string generator;
    uint64_t seed = 0;
    nn::Shape shape;  // channel layout of a sample; c*h*w = D
};

// m x D inputs with labels in {-1, +1}.
struct Dataset {
    Matrix x;
    std::vector<double> y;
    DatasetMeta meta;

    std::size_t size() const { return x.rows(); }
    std::size_t dim() const { return x.cols(); }
    std::vector<double> sample(std::size_t i) const;
    void validate() const;  // finiteness, |y|=1, m >= 1
};

// Orthonormal direction set; construction checks pairwise dot <= 1e-10 and
// unit norms.
struct DirectionSet {
    std::vector<std::vector<double>> u;
    explicit DirectionSet(std::vector<std::vector<double>> dirs);
};

enum class LabelKind { Linear, Quadratic, Sinusoidal };
LabelKind label_kind_from_string(const std::string& s);
std::string to_string(LabelKind k);

// Per-channel mean/std used by the sinusoidal labeling; computed on a
// reference (train) split and reused verbatim on any paired split.
struct ChannelStats {
    std::vector<double> mean, std;
};
ChannelStats channel_stats(const Dataset& d);

// Two concentric circles of radii r_plus/r_minus in span(u1, u2), Gaussian
// noise of std sigma_noise in the orthogonal complement; balanced labels.
Dataset gen_circles(int dim, const std::vector<double>& u1, const std::vector<double>& u2,
                    double r_plus, double r_minus, std::size_t m, double sigma_noise,
                    uint64_t seed);

// Relabels `base` by the kind applied along u. Labels are computed on
// x + eta where eta has per-channel variance label_noise_ratio times the
// channel variance; the inputs themselves are untouched. For the sinusoidal
// kind the inner product uses per-channel standardized inputs (stats from
// `stats` when given, else from `base`).
Dataset gen_direction_labeled(const Dataset& base, const std::vector<double>& u, double b,
                              LabelKind kind, double label_noise_ratio, uint64_t seed,
                              const ChannelStats* stats = nullptr);
// Convenience: Gaussian base N(0, cov) of m samples, then relabel as above.
Dataset gen_direction_labeled(const SymMatrix& cov, std::size_t m, const std::vector<double>& u,
                              double b, LabelKind kind, double label_noise_ratio, uint64_t seed);

// x = eps*alpha*u + omega, omega ~ N(0, sigma^2 (I - u u^T)); labels by kind
// on x^T u (sinusoidal standardizes per channel first).
Dataset gen_isotropic_margin(int dim, const std::vector<double>& u, double eps, double sigma,
                             LabelKind kind, double b, std::size_t m, uint64_t seed,
                             nn::Shape shape = {});

// x = eps*u1*y + r_y * (alpha*u2 + beta*u3)/||.|| + omega; y uniform +-1.
Dataset gen_sbh(int dim, const std::vector<double>& u1, const std::vector<double>& u2,
                const std::vector<double>& u3, double eps, double r_plus, double r_minus,
                double sigma_omega, std::size_t m, uint64_t seed, nn::Shape shape = {});

// x ~ N(0, cov / ||cov||_2) with i.i.d. uniform +-1 labels.
Dataset gen_covariance_gaussian(const SymMatrix& cov, std::size_t m, uint64_t seed,
                                nn::Shape shape = {});

// CIFAR-10 binary format: records of 1 label byte + 3072 pixel bytes, 10000
// records per file. Animal classes {2,3,4,5,6,7} map to +1, the rest to -1.
// Pixels are scaled to [0,1]; `downsample` area-averages each channel to
// side x side (side must divide 32). per_class samples are drawn
// seed-deterministically from each binary class.
Dataset load_cifar2(const std::filesystem::path& dir, std::size_t per_class, int downsample,
                    uint64_t seed = 0, bool test_split = false);

// Directory layout: x.bin (matrix), y.csv, meta.json.
void save_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Sum of outer products, no centering, no normalization.
SymMatrix data_covariance(const Dataset& d);

}  // namespace gih::data
