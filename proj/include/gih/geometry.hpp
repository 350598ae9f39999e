#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gih/data.hpp"
#include "gih/matrix.hpp"
#include "gih/nn.hpp"
#include "gih/rng.hpp"
#include "gih/sampling.hpp"

namespace gih::geom {

// Distribution the geometry statistics are averaged over.
struct ProbingSpec {
    enum class Kind { Isotropic, Covariance, Empirical };
    Kind kind = Kind::Isotropic;
    double sigma = 1.0;
    SymMatrix cov;
    Matrix samples;  // empirical probe pool, one per row
    std::size_t n_probes = 1;

    static ProbingSpec isotropic(double sigma, std::size_t n_probes = 1);
    static ProbingSpec covariance(SymMatrix cov, std::size_t n_probes = 1);
    static ProbingSpec empirical(Matrix samples, std::size_t n_probes = 1);
};

// Draws probes for one replica stream; safe to share across threads.
class ProbeSampler {
public:
    ProbeSampler(const ProbingSpec& spec, std::size_t dim);
    std::vector<double> draw(SeededRng& rng) const;

private:
    const ProbingSpec& spec_;
    std::size_t dim_;
    std::optional<CovSampler> cov_;
};

struct GeometrySnapshot {
    SymMatrix g;
    int t = 0;
    std::size_t n_models = 0;
    ProbingSpec probing;
};

struct EvolutionEstimate {
    SymMatrix delta;
    std::size_t n_models = 0;
    ProbingSpec probing;
    double eps = 0.0;
};

// Parameter ensemble to average over: fresh initializations of a spec, or an
// explicit list of parameter vectors.
struct ParamSource {
    std::size_t n_models = 0;
    uint64_t seed = 0;
    const std::vector<nn::Params>* ensemble = nullptr;  // optional

    static ParamSource fresh_init(std::size_t n_models, uint64_t seed);
    static ParamSource from_ensemble(const std::vector<nn::Params>& params, uint64_t probe_seed);
};

// Mean over models and probes of the input-gradient outer product,
// symmetrized. Deterministic given seeds; independent of the worker count.
GeometrySnapshot estimate_avg_geometry(const nn::ModelSpec& spec, const ParamSource& source,
                                       const ProbingSpec& probing, int n_threads = 0);

// Mean over fresh initializations of [mixed-derivative along the SSE
// gradient-flow velocity] times the input-gradient transpose, symmetrized.
EvolutionEstimate estimate_geometry_evolution(const nn::ModelSpec& spec, const data::Dataset& ds,
                                              const ProbingSpec& probing, std::size_t n_models,
                                              double eps, uint64_t seed, int n_threads = 0);

// Exact SSE gradient-flow velocity: -sum_mu grad_theta f(x_mu) (f(x_mu) - y_mu).
std::vector<double> sse_flow_velocity(const nn::Network& net, const nn::Params& p,
                                      const data::Dataset& ds);

// 1 - Corr(g_t, g_prev); in [0, 2].
double geometric_velocity(const SymMatrix& g_t, const SymMatrix& g_prev);

// Same eigenvectors, eigenvalues reassigned in reverse order.
SymMatrix flip_spectrum(const SymMatrix& g);

struct GihBasis {
    std::vector<std::vector<double>> vectors;  // orthonormal, high-S/low-G first
    std::vector<double> values;                // generalized eigenvalues, descending
};

// Solves S v = lambda (G + lambda_reg*tr(G)/D * I) v via Cholesky whitening;
// directions sorted by descending lambda and re-orthonormalized in order.
GihBasis generalized_gih_basis(const SymMatrix& g, const SymMatrix& s, double lambda_reg);

// Applies Q_k = I - sum_{i<k} v_i v_i^T to every sample.
data::Dataset project_out_features(const data::Dataset& ds,
                                   const std::vector<std::vector<double>>& basis, std::size_t k);

// Smallest k' whose leading candidate directions explain at least as much
// variance of s as the k leading target directions; clamped to D.
std::size_t variance_matched_cutoff(const SymMatrix& s,
                                    const std::vector<std::vector<double>>& target_basis,
                                    std::size_t k,
                                    const std::vector<std::vector<double>>& candidate_basis);

// Rayleigh quotient of the normalized sample: (x/||x||)^T g (x/||x||).
double sample_score(const std::vector<double>& x, const SymMatrix& g);

enum class PruneMode { Random, Score };

// Removes floor(fraction*m) samples: lowest Score first (ties by original
// index) or a uniform subset of the same size.
data::Dataset prune_samples(const data::Dataset& ds, const SymMatrix& g, double fraction,
                            PruneMode mode, uint64_t seed);

// Persistence: <stem>.bin (matrix), <stem>.csv, <stem>.meta.json sidecar.
void save_snapshot(const GeometrySnapshot& snap, const std::filesystem::path& stem,
                   uint64_t seed);
GeometrySnapshot load_snapshot(const std::filesystem::path& stem);

}  // namespace gih::geom
