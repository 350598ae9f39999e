#include "gih/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "gih/error.hpp"
#include "gih/linalg.hpp"
#include "gih/parallel.hpp"
#include "gih/serialize.hpp"

namespace gih::geom {

using json = nlohmann::json;

namespace {
constexpr std::size_t kReplicaBlock = 16;
}

ProbingSpec ProbingSpec::isotropic(double sigma, std::size_t n_probes) {
    if (sigma <= 0.0) throw Error("probing: sigma must be positive");
    if (n_probes < 1) throw Error("probing: need at least one probe");
    ProbingSpec p;
    p.kind = Kind::Isotropic;
    p.sigma = sigma;
    p.n_probes = n_probes;
    return p;
}

ProbingSpec ProbingSpec::covariance(SymMatrix cov, std::size_t n_probes) {
    if (n_probes < 1) throw Error("probing: need at least one probe");
    ProbingSpec p;
    p.kind = Kind::Covariance;
    p.cov = std::move(cov);
    p.n_probes = n_probes;
    return p;
}

ProbingSpec ProbingSpec::empirical(Matrix samples, std::size_t n_probes) {
    if (samples.rows() == 0) throw Error("probing: empty sample pool");
    if (n_probes < 1) throw Error("probing: need at least one probe");
    ProbingSpec p;
    p.kind = Kind::Empirical;
    p.samples = std::move(samples);
    p.n_probes = n_probes;
    return p;
}

ProbeSampler::ProbeSampler(const ProbingSpec& spec, std::size_t dim) : spec_(spec), dim_(dim) {
    if (spec.kind == ProbingSpec::Kind::Covariance) {
        if (spec.cov.dim() != dim) throw ShapeError("probing covariance dimension mismatch");
        cov_.emplace(spec.cov);
    } else if (spec.kind == ProbingSpec::Kind::Empirical && spec.samples.cols() != dim) {
        throw ShapeError("probing sample dimension mismatch");
    }
}

std::vector<double> ProbeSampler::draw(SeededRng& rng) const {
    switch (spec_.kind) {
        case ProbingSpec::Kind::Isotropic:
            return gaussian_vector(rng, dim_, spec_.sigma);
        case ProbingSpec::Kind::Covariance:
            return cov_->sample(rng);
        default: {
            std::size_t i = rng.next_below(spec_.samples.rows());
            return std::vector<double>(spec_.samples.row(i), spec_.samples.row(i) + dim_);
        }
    }
}

ParamSource ParamSource::fresh_init(std::size_t n_models, uint64_t seed) {
    if (n_models < 1) throw Error("param source: need at least one model");
    ParamSource s;
    s.n_models = n_models;
    s.seed = seed;
    return s;
}

ParamSource ParamSource::from_ensemble(const std::vector<nn::Params>& params,
                                       uint64_t probe_seed) {
    if (params.empty()) throw Error("param source: empty ensemble");
    ParamSource s;
    s.n_models = params.size();
    s.seed = probe_seed;
    s.ensemble = &params;
    return s;
}

namespace {

struct OuterAccum {
    std::vector<double> a;  // lower triangle of a symmetric accumulator
    std::size_t dim = 0;
    explicit OuterAccum(std::size_t d = 0) : a(d * (d + 1) / 2, 0.0), dim(d) {}
    void add_outer(const std::vector<double>& g) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            double gi = g[i];
            for (std::size_t j = 0; j <= i; ++j) a[idx++] += gi * g[j];
        }
    }
    void merge(const OuterAccum& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    }
    SymMatrix to_sym(double scale) const {
        SymMatrix s(dim);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j <= i; ++j) s.set_sym(i, j, a[idx++] * scale);
        return s;
    }
};

struct FullAccum {
    Matrix a;
    explicit FullAccum(std::size_t d = 0) : a(d, d) {}
    void add_outer(const std::vector<double>& u, const std::vector<double>& v) {
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double ui = u[i];
            double* row = a.row(i);
            for (std::size_t j = 0; j < a.cols(); ++j) row[j] += ui * v[j];
        }
    }
    void merge(const FullAccum& o) { a += o.a; }
};

}  // namespace

GeometrySnapshot estimate_avg_geometry(const nn::ModelSpec& spec, const ParamSource& source,
                                       const ProbingSpec& probing, int n_threads) {
    nn::Network net(spec);
    const std::size_t dim = net.input_shape().size();
    ProbeSampler probes(probing, dim);
    SeededRng root(source.seed);

    OuterAccum total = parallel_block_reduce<OuterAccum>(
        source.n_models, kReplicaBlock, [dim] { return OuterAccum(dim); },
        [&](OuterAccum& acc, std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                nn::Params p = source.ensemble ? (*source.ensemble)[r]
                                               : net.init_params(root.derive(r, 0));
                SeededRng probe_rng = root.derive(r, 1);
                for (std::size_t k = 0; k < probing.n_probes; ++k) {
                    std::vector<double> x = probes.draw(probe_rng);
                    acc.add_outer(net.input_gradient(p, x));
                }
            }
        },
        [](OuterAccum& total, const OuterAccum& part, std::size_t) { total.merge(part); },
        n_threads);

    GeometrySnapshot snap;
    snap.g = total.to_sym(1.0 / (double(source.n_models) * double(probing.n_probes)));
    snap.t = 0;
    snap.n_models = source.n_models;
    snap.probing = probing;
    return snap;
}

std::vector<double> sse_flow_velocity(const nn::Network& net, const nn::Params& p,
                                      const data::Dataset& ds) {
    std::vector<double> vel(net.param_count(), 0.0);
    for (std::size_t mu = 0; mu < ds.size(); ++mu) {
        nn::GradResult r = net.evaluate(p, ds.sample(mu), false, true);
        double resid = r.logit - ds.y[mu];
        for (std::size_t i = 0; i < vel.size(); ++i) vel[i] -= r.param_grad[i] * resid;
    }
    return vel;
}

EvolutionEstimate estimate_geometry_evolution(const nn::ModelSpec& spec, const data::Dataset& ds,
                                              const ProbingSpec& probing, std::size_t n_models,
                                              double eps, uint64_t seed, int n_threads) {
    if (eps <= 0.0) throw Error("estimate_geometry_evolution: eps must be positive");
    ds.validate();
    nn::Network net(spec);
    const std::size_t dim = net.input_shape().size();
    ProbeSampler probes(probing, dim);
    SeededRng root(seed);

    FullAccum total = parallel_block_reduce<FullAccum>(
        n_models, kReplicaBlock, [dim] { return FullAccum(dim); },
        [&](FullAccum& acc, std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                nn::Params p = net.init_params(root.derive(r, 0));
                std::vector<double> vel = sse_flow_velocity(net, p, ds);
                if (norm2(vel) == 0.0) continue;  // stationary replica contributes zero
                SeededRng probe_rng = root.derive(r, 1);
                for (std::size_t k = 0; k < probing.n_probes; ++k) {
                    std::vector<double> x = probes.draw(probe_rng);
                    std::vector<double> w = net.mixed_dvp(p, x, vel, eps);
                    std::vector<double> g = net.input_gradient(p, x);
                    acc.add_outer(w, g);
                }
            }
        },
        [](FullAccum& total, const FullAccum& part, std::size_t) { total.merge(part); },
        n_threads);

    double scale = 1.0 / (double(n_models) * double(probing.n_probes));
    SymMatrix delta(dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            delta.set_sym(i, j, (total.a(i, j) + total.a(j, i)) * scale);

    EvolutionEstimate est;
    est.delta = std::move(delta);
    est.n_models = n_models;
    est.probing = probing;
    est.eps = eps;
    return est;
}

double geometric_velocity(const SymMatrix& g_t, const SymMatrix& g_prev) {
    return 1.0 - frobenius_corr(g_t, g_prev);
}

SymMatrix flip_spectrum(const SymMatrix& g) {
    EigenDecomposition eig = sym_eig(g);
    const std::size_t n = g.dim();
    SymMatrix out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double lambda = eig.values[n - 1 - k];
        if (lambda == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                out(i, j) += lambda * eig.vectors(i, k) * eig.vectors(j, k);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out(j, i) = out(i, j);
    return out;
}

GihBasis generalized_gih_basis(const SymMatrix& g, const SymMatrix& s, double lambda_reg) {
    if (g.dim() != s.dim()) throw ShapeError("generalized_gih_basis: dimension mismatch");
    if (lambda_reg <= 0.0) throw Error("generalized_gih_basis: lambda_reg must be positive");
    const std::size_t n = g.dim();

    SymMatrix reg = g;
    double shift = lambda_reg * g.trace() / double(n);
    for (std::size_t i = 0; i < n; ++i) reg(i, i) += shift;
    Matrix l = cholesky(reg);  // throws if still not PD

    // Whitened problem: C = L^-1 S L^-T shares eigenvalues with S v = lambda reg v.
    Matrix y(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = s(i, j);
        std::vector<double> sol = solve_lower(l, col);
        for (std::size_t i = 0; i < n; ++i) y(i, j) = sol[i];
    }
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) col[k] = y(i, k);
        std::vector<double> sol = solve_lower(l, col);
        for (std::size_t j = 0; j < n; ++j) c(i, j) = sol[j];
    }
    EigenDecomposition eig = sym_eig(SymMatrix::symmetrized(c));

    std::vector<std::vector<double>> raw;
    raw.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = eig.vectors(i, k);
        raw.push_back(solve_lower_transposed(l, col));
    }
    GihBasis basis;
    basis.vectors = gram_schmidt(raw, 1e-12);
    basis.values = eig.values;
    return basis;
}

namespace {
void check_orthonormal(const std::vector<std::vector<double>>& basis, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(norm2(basis[i]) - 1.0) > 1e-8)
            throw Error("basis vector is not unit length");
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::abs(dot(basis[i], basis[j])) > 1e-8)
                throw Error("basis is not orthonormal");
    }
}
}  // namespace

data::Dataset project_out_features(const data::Dataset& ds,
                                   const std::vector<std::vector<double>>& basis, std::size_t k) {
    if (k > basis.size() || k > ds.dim()) throw Error("project_out_features: k out of range");
    check_orthonormal(basis, k);
    data::Dataset out = ds;
    std::vector<double> x(ds.dim());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t i = 0; i < ds.dim(); ++i) x[i] = ds.x(r, i);
        for (std::size_t b = 0; b < k; ++b) {
            double c = dot(x, basis[b]);
            for (std::size_t i = 0; i < ds.dim(); ++i) x[i] -= c * basis[b][i];
        }
        for (std::size_t i = 0; i < ds.dim(); ++i) out.x(r, i) = x[i];
    }
    return out;
}

std::size_t variance_matched_cutoff(const SymMatrix& s,
                                    const std::vector<std::vector<double>>& target_basis,
                                    std::size_t k,
                                    const std::vector<std::vector<double>>& candidate_basis) {
    if (k > target_basis.size()) throw Error("variance_matched_cutoff: k out of range");
    auto explained = [&s](const std::vector<double>& v) { return dot(v, matvec(s, v)); };
    double target = 0.0;
    for (std::size_t i = 0; i < k; ++i) target += explained(target_basis[i]);

    double cum = 0.0;
    std::size_t limit = std::min<std::size_t>(candidate_basis.size(), s.dim());
    for (std::size_t kp = 0; kp <= limit; ++kp) {
        if (cum >= target) return kp;
        if (kp < limit) cum += explained(candidate_basis[kp]);
    }
    return limit;
}

double sample_score(const std::vector<double>& x, const SymMatrix& g) {
    double n = norm2(x);
    if (n == 0.0) throw Error("sample_score: zero vector");
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] / n;
    return dot(u, matvec(g, u));
}

data::Dataset prune_samples(const data::Dataset& ds, const SymMatrix& g, double fraction,
                            PruneMode mode, uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) throw Error("prune_samples: fraction in [0, 1)");
    ds.validate();
    const std::size_t m = ds.size();
    std::size_t n_remove = static_cast<std::size_t>(fraction * double(m));

    std::vector<char> removed(m, 0);
    if (mode == PruneMode::Score) {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> score(m);
        for (std::size_t i = 0; i < m; ++i) score[i] = sample_score(ds.sample(i), g);
        std::stable_sort(order.begin(), order.end(),
                         [&score](std::size_t a, std::size_t b) { return score[a] < score[b]; });
        for (std::size_t i = 0; i < n_remove; ++i) removed[order[i]] = 1;
    } else {
        SeededRng rng(seed, 0x30);
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < n_remove; ++i) {
            std::size_t j = i + rng.next_below(m - i);
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < n_remove; ++i) removed[idx[i]] = 1;
    }

    data::Dataset out;
    out.meta = ds.meta;
    out.x = Matrix(m - n_remove, ds.dim());
    out.y.reserve(m - n_remove);
    std::size_t r = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (removed[i]) continue;
        for (std::size_t j = 0; j < ds.dim(); ++j) out.x(r, j) = ds.x(i, j);
        out.y.push_back(ds.y[i]);
        ++r;
    }
    return out;
}

void save_snapshot(const GeometrySnapshot& snap, const std::filesystem::path& stem,
                   uint64_t seed) {
    save_matrix_bin(snap.g.to_matrix(), stem.string() + ".bin");
    save_matrix_csv(snap.g.to_matrix(), stem.string() + ".csv");
    json probing = {{"n_probes", snap.probing.n_probes}};
    switch (snap.probing.kind) {
        case ProbingSpec::Kind::Isotropic:
            probing["kind"] = "isotropic";
            probing["sigma"] = snap.probing.sigma;
            break;
        case ProbingSpec::Kind::Covariance:
            probing["kind"] = "covariance";
            break;
        default:
            probing["kind"] = "empirical";
            break;
    }
    json meta = {{"t", snap.t}, {"n_models", snap.n_models}, {"probing", probing}, {"seed", seed}};
    std::ofstream out(stem.string() + ".meta.json");
    if (!out) throw IoError("cannot write snapshot metadata");
    out << meta.dump(2) << '\n';
}

GeometrySnapshot load_snapshot(const std::filesystem::path& stem) {
    GeometrySnapshot snap;
    snap.g = SymMatrix::from_matrix(load_matrix_bin(stem.string() + ".bin"));
    std::ifstream in(stem.string() + ".meta.json");
    if (in) {
        json meta = json::parse(in);
        snap.t = meta.value("t", 0);
        snap.n_models = meta.value("n_models", 0ULL);
        if (meta.contains("probing")) {
            const json& p = meta["probing"];
            snap.probing.n_probes = p.value("n_probes", 1ULL);
            snap.probing.sigma = p.value("sigma", 1.0);
        }
    }
    return snap;
}

}  // namespace gih::geom
