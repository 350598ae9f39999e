#include "gih/harness.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gih/data.hpp"
#include "gih/error.hpp"
#include "gih/geometry.hpp"
#include "gih/linalg.hpp"
#include "gih/nn.hpp"
#include "gih/oracles.hpp"
#include "gih/parallel.hpp"
#include "gih/sampling.hpp"
#include "gih/serialize.hpp"
#include "gih/svg.hpp"
#include "gih/train.hpp"

namespace gih::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------- registry ----------

struct ExperimentInfo {
    std::string target;
    json defaults;
};

const std::map<std::string, ExperimentInfo>& registry() {
    static const std::map<std::string, ExperimentInfo> reg = {
        {"verify-theorems",
         {"closed-form claims vs Monte-Carlo estimates",
          json{{"a7_models", 200000},
               {"thm3_models", 50000},
               {"thm4_models", 200000},
               {"lemma3_samples", 1000000},
               {"thm1_models", 12000},
               {"thm1_widths", {8, 32, 128}},
               {"thm2_models", 20000},
               {"cor1_models", 40000},
               {"prop1_models", 10000},
               {"linreg_models", 50000},
               {"eps", 1e-3},
               {"eps_relu", 0.1}}}},
        {"conjecture1",
         {"early-training correlation of the geometry with the projected data covariance",
          json{{"side", 16},
               {"data_channels", 3},
               {"m", 1024},
               {"channels", 8},
               {"kernel", 3},
               {"epochs", 32},
               {"lr", 0.1},
               {"momentum", 0.9},
               {"batch", 128},
               {"n_runs", 25},
               {"probes_t", 40},
               {"init_models", 10000},
               {"cov_kind", "spiked"},
               {"label_dir", "top_s"},
               {"label_noise", 0.2},
               {"spike_ranks", {2, 3, 4, 5}},
               {"spike_amp", 1.0},
               {"background_std", 0.25},
               {"cifar_dir", ""}}}},
        {"velocity",
         {"geometric velocity under matched vs flipped covariance data",
          json{{"side", 8},
               {"data_channels", 3},
               {"m", 512},
               {"channels", 8},
               {"epochs", 240},
               {"snap_stride", 8},
               {"lr", 0.2},
               {"momentum", 0.9},
               {"batch", 128},
               {"n_runs", 8},
               {"probes_t", 64},
               {"init_models", 4000}}}},
        {"spectrum-labels",
         {"generalization vs discriminant-direction eigenvalue rank",
          json{{"side", 8},
               {"data_channels", 3},
               {"arches", {"miniresnet", "mlp"}},
               {"channels", 8},
               {"mlp_widths", {100, 100}},
               {"indices", json::array()},  // empty = {0, D/4, D/2, 3D/4, D-1}
               {"seeds", {1, 2, 3}},
               {"eps", 0.9},
               {"sigma", 1.0},
               {"kind", "linear"},
               {"b", 0.0},
               {"m_train", 512},
               {"m_test", 2048},
               {"epochs", 120},
               {"lr", 0.1},
               {"momentum", 0.9},
               {"batch", 128},
               {"init_models", 4000}}}},
        {"sbh",
         {"linear vs non-linear component reliance across geometry ranks",
          json{{"side", 8},
               {"data_channels", 3},
               {"channels", 8},
               {"indices", json::array()},
               {"seeds", {1, 2, 3}},
               {"eps", 2.0},
               {"r_plus", 1.0},
               {"r_minus", 2.0},
               {"sigma_omega", 0.2},
               {"m_train", 768},
               {"m_test", 1024},
               {"epochs", 80},
               {"lr", 0.1},
               {"momentum", 0.9},
               {"batch", 128},
               {"init_models", 4000}}}},
        {"prune-features",
         {"feature elimination along the generalized basis vs variance-matched random",
          json{{"side", 8},
               {"data_channels", 3},
               {"channels", 8},
               {"seeds", {1, 2, 3, 4, 5}},
               {"k", 48},
               {"n_junk", 64},
               {"signal_scale", 1.5},
               {"junk_scale", 1.0},
               {"noise", 0.05},
               {"m_train", 512},
               {"m_test", 1024},
               {"epochs", 60},
               {"lr", 0.1},
               {"momentum", 0.9},
               {"batch", 128},
               {"init_models", 4000}}}},
        {"prune-samples",
         {"sample pruning by geometry score vs random",
          json{{"side", 8},
               {"data_channels", 3},
               {"channels", 8},
               {"seeds", {1, 2, 3, 4, 5}},
               {"fraction", 0.5},
               {"signal_scale", 1.5},
               {"noise", 0.05},
               {"m_train", 768},
               {"m_test", 1024},
               {"epochs", 60},
               {"lr", 0.1},
               {"momentum", 0.9},
               {"batch", 128},
               {"init_models", 4000}}}},
        {"geometry-heatmap",
         {"average geometry visualization and spectrum",
          json{{"model", "a7"}, {"model_path", ""}, {"n_models", 20000}, {"probes", 1},
               {"sigma_probe", 1.0}}}},
    };
    return reg;
}

// ---------- small helpers ----------

std::string csv_cell(double v) { return format_double(v); }

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw FormatError("CSV column not found: " + name);
    }
    double value(std::size_t row, std::size_t c) const { return std::stod(rows[row][c]); }
};

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV: " + path.string());
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header) {
            t.columns = std::move(cells);
            header = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

void write_csv(const fs::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CSV: " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// Spearman rank correlation; average ranks are not needed for distinct values.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = double(i);
        return r;
    };
    std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = mean_of(rx), my = mean_of(ry);
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// Random anisotropic covariance: decaying spectrum in a seeded random
// orthonormal basis.
SymMatrix random_anisotropic_cov(int dim, uint64_t seed) {
    SeededRng rng(seed, 0x60);
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < dim; ++i) raw.push_back(gaussian_vector(rng, dim));
    std::vector<std::vector<double>> q = gram_schmidt(raw, 1e-10);
    while (int(q.size()) < dim) {  // refill in the unlikely degenerate case
        raw.push_back(gaussian_vector(rng, dim));
        q = gram_schmidt(raw, 1e-10);
    }
    SymMatrix cov(dim);
    for (int k = 0; k < dim; ++k) {
        double lambda = 4.0 / std::pow(1.0 + k, 0.85);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j <= i; ++j) cov(i, j) += lambda * q[k][i] * q[k][j];
    }
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < i; ++j) cov(j, i) = cov(i, j);
    return cov;
}

// Image-like covariance for the synthetic fallback: per-channel squared-
// exponential spatial kernel (Kronecker in y and x) plus a diagonal jitter.
SymMatrix smooth_image_cov(int channels, int side, double length_scale, double jitter) {
    int dim = channels * side * side;
    SymMatrix cov(dim);
    auto k1 = [length_scale](int a, int b) {
        double d = a - b;
        return std::exp(-d * d / (2.0 * length_scale * length_scale));
    };
    for (int c = 0; c < channels; ++c)
        for (int y1 = 0; y1 < side; ++y1)
            for (int x1 = 0; x1 < side; ++x1)
                for (int y2 = 0; y2 < side; ++y2)
                    for (int x2 = 0; x2 < side; ++x2) {
                        int i = (c * side + y1) * side + x1;
                        int j = (c * side + y2) * side + x2;
                        if (j > i) continue;
                        double v = k1(y1, y2) * k1(x1, x2);
                        if (i == j) v += jitter;
                        cov.set_sym(i, j, v);
                    }
    return cov;
}

std::vector<double> eig_column(const EigenDecomposition& eig, std::size_t k) {
    std::vector<double> v(eig.vectors.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = eig.vectors(i, k);
    return v;
}

nn::ModelSpec arch_for(const std::string& name, nn::Shape shape, int channels,
                       const std::vector<int>& mlp_widths) {
    if (name == "miniresnet") return nn::make_mini_resnet(shape, channels);
    if (name == "mlp") {
        nn::ModelSpec s = nn::make_mlp(shape.size(), mlp_widths);
        s.input = shape;  // keep the channel layout for data generators
        return s;
    }
    throw ConfigError("unknown architecture: " + name);
}

geom::GeometrySnapshot init_geometry(const nn::ModelSpec& spec, std::size_t n_models,
                                     uint64_t seed) {
    return geom::estimate_avg_geometry(spec, geom::ParamSource::fresh_init(n_models, seed),
                                       geom::ProbingSpec::isotropic(1.0, 1));
}

double mean_final_train_acc(const std::vector<train::Trajectory>& runs) {
    std::vector<double> accs;
    for (const auto& r : runs) accs.push_back(r.metrics.back().train_acc);
    return mean_of(accs);
}

// ---------- theorem claims ----------

TheoremClaim claim_a7_golden(const json& p, uint64_t seed) {
    nn::ModelSpec spec = nn::make_conv1d_pool_single(3, 2);
    spec.final_std = 2.0;  // true ensemble mean of grad grad^T is then the bracket matrix
    auto snap = geom::estimate_avg_geometry(
        spec, geom::ParamSource::fresh_init(p.at("a7_models").get<std::size_t>(), seed),
        geom::ProbingSpec::isotropic(1.0, 1));
    SymMatrix target(3);
    const double b[3][3] = {{1, 1, 0}, {1, 2, 1}, {0, 1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) target(i, j) = b[i][j];
    double rel = (snap.g - target).frobenius_norm() / target.frobenius_norm();
    EigenDecomposition eig = sym_eig(snap.g);
    bool eig_ok = std::abs(eig.values[0] - 3.0) < 0.05 && std::abs(eig.values[1] - 1.0) < 0.05 &&
                  std::abs(eig.values[2] - 0.0) < 0.05;
    return {"A7-golden", 0.0, rel, 0.02, rel < 0.02 && eig_ok};
}

TheoremClaim claim_thm3_identity(const json& p, uint64_t seed) {
    nn::ModelSpec spec = nn::make_mlp(16, {128, 128});
    auto snap = geom::estimate_avg_geometry(
        spec, geom::ParamSource::fresh_init(p.at("thm3_models").get<std::size_t>(), seed),
        geom::ProbingSpec::isotropic(1.0, 1));
    double c = snap.g.trace() / 16.0;
    double off_max = 0.0, diag_dev = 0.0;
    for (int i = 0; i < 16; ++i) {
        diag_dev = std::max(diag_dev, std::abs(snap.g(i, i) - c) / c);
        for (int j = 0; j < i; ++j) off_max = std::max(off_max, std::abs(snap.g(i, j)));
    }
    return {"Thm3-identity", 0.0, off_max / c, 0.05, off_max < 0.05 * c && diag_dev < 0.05};
}

TheoremClaim claim_thm4_oracle(const json& p, uint64_t seed) {
    nn::ModelSpec spec = nn::make_conv2d_pool(nn::Shape{1, 3, 3}, 8, 2, 0, false);
    spec.hidden_std = 1.0;
    spec.final_std = 1.0;
    auto snap = geom::estimate_avg_geometry(
        spec, geom::ParamSource::fresh_init(p.at("thm4_models").get<std::size_t>(), seed),
        geom::ProbingSpec::isotropic(1.0, 1));
    SymMatrix target = oracle::oracle_convpool_G_2d(3, 3, 2, 1, 8, 1.0, 1.0);
    double rel = (snap.g - target).frobenius_norm() / target.frobenius_norm();
    return {"Thm4-oracle", 0.0, rel, 0.03, rel < 0.03};
}

TheoremClaim claim_lemma3(const json& p, uint64_t seed) {
    auto oracle = oracle::oracle_lemma_normalized_gaussian(
        8, p.at("lemma3_samples").get<std::size_t>(), seed);
    double dev = 0.0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            dev = std::max(dev, std::abs(oracle.mc(i, j) - oracle.analytic(i, j)));
    bool trace_ok = std::abs(oracle.mc.trace() - 1.0) < 1e-12;
    return {"Lemma3", 0.0, dev, 5e-3, dev < 5e-3 && trace_ok};
}

TheoremClaim claim_thm1_trend(const json& p, uint64_t seed) {
    const int dim = 64;
    SymMatrix cov = random_anisotropic_cov(dim, seed);
    data::Dataset ds = gen_labeled_gaussian_random(cov, 64, seed);
    SymMatrix s = data::data_covariance(ds);

    std::vector<double> corr;
    for (int width : p.at("thm1_widths").get<std::vector<int>>()) {
        nn::ModelSpec spec = nn::make_mlp(dim, {width});
        spec.hidden_std = 1.0;
        spec.final_std = 2.0;  // damps the identity-shaped error term relative to the S terms
        auto est = geom::estimate_geometry_evolution(
            spec, ds, geom::ProbingSpec::isotropic(1.0, 2),
            p.at("thm1_models").get<std::size_t>(), p.at("eps_relu").get<double>(), seed);
        corr.push_back(std::abs(frobenius_corr(est.delta, s)));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < corr.size(); ++i)
        if (corr[i] < corr[i - 1] - 0.03) monotone = false;
    bool pass = monotone && corr.back() > 0.9;
    return {"Thm1-trend", 1.0, corr.back(), 0.9, pass};
}

TheoremClaim claim_thm2_corr(const json& p, uint64_t seed) {
    const int dim = 16;
    nn::ModelSpec spec = nn::make_conv1d_pool(dim, 64, 4);
    spec.hidden_std = 1.0;
    spec.final_std = 1.0;
    SymMatrix cov = random_anisotropic_cov(dim, seed + 1);
    data::Dataset ds = gen_labeled_gaussian_random(cov, 32, seed + 1);
    SymMatrix s = data::data_covariance(ds);

    std::size_t n = p.at("thm2_models").get<std::size_t>();
    auto g_snap = geom::estimate_avg_geometry(spec, geom::ParamSource::fresh_init(n, seed + 2),
                                              geom::ProbingSpec::isotropic(1.0, 1));
    SymMatrix gsg = sandwich_product(g_snap.g, s);
    auto est = geom::estimate_geometry_evolution(spec, ds, geom::ProbingSpec::isotropic(1.0, 1), n,
                                                 p.at("eps").get<double>(), seed + 3);
    double corr = std::abs(frobenius_corr(est.delta, gsg));
    return {"Thm2-corr", 1.0, corr, 0.95, corr > 0.95};
}

TheoremClaim claim_cor1_sandwich(const json& p, uint64_t seed) {
    auto maps = oracle::ConvIndexMaps::make_1d(4, 2, 1);
    std::vector<SymMatrix> patch_covs(maps.n_patches(), SymMatrix::diag({4.0, 1.0}));
    auto bounds = oracle::verify_corollary_bounds(maps, patch_covs,
                                                  p.at("cor1_models").get<std::size_t>(), seed);
    return {"Cor1-sandwich", 0.0, bounds.max_violation, 1.0, bounds.sandwich_ok};
}

TheoremClaim claim_prop1_labels(const json& p, uint64_t seed) {
    const int dim = 16;
    nn::ModelSpec spec = nn::make_mlp(dim, {64});
    data::Dataset ds = gen_labeled_gaussian_random(SymMatrix::identity(dim), 64, seed + 4);
    data::Dataset flipped = ds;
    for (double& y : flipped.y) y = -y;

    std::size_t n = p.at("prop1_models").get<std::size_t>();
    double eps = p.at("eps_relu").get<double>();
    auto d_pos = geom::estimate_geometry_evolution(spec, ds, geom::ProbingSpec::isotropic(1.0, 1),
                                                   n, eps, seed + 5);
    auto d_neg = geom::estimate_geometry_evolution(spec, flipped,
                                                   geom::ProbingSpec::isotropic(1.0, 1), n, eps,
                                                   seed + 5);
    double corr = std::abs(frobenius_corr(d_pos.delta, d_neg.delta));
    return {"Prop1-labels", 1.0, corr, 0.95, corr > 0.95};
}

TheoremClaim claim_linreg_delta(const json& p, uint64_t seed) {
    const int dim = 16;
    nn::ModelSpec spec;
    spec.input = nn::Shape::flat(dim);
    spec.layers.push_back(nn::Layer::dense(1));
    spec.final_std = 1.0;
    SymMatrix cov = random_anisotropic_cov(dim, seed + 6);
    data::Dataset ds = gen_labeled_gaussian_random(cov, 32, seed + 6);
    SymMatrix oracle_delta =
        oracle::oracle_linear_regression_delta(data::data_covariance(ds), 1.0);
    auto est = geom::estimate_geometry_evolution(spec, ds, geom::ProbingSpec::isotropic(1.0, 1),
                                                 p.at("linreg_models").get<std::size_t>(),
                                                 p.at("eps").get<double>(), seed + 7);
    double corr = std::abs(frobenius_corr(est.delta, oracle_delta));
    return {"LinReg-delta", 1.0, corr, 0.999, corr > 0.999};
}

}  // namespace

// Gaussian inputs with i.i.d. random labels; shared by several claims.
data::Dataset gen_labeled_gaussian_random(const SymMatrix& cov, std::size_t m, uint64_t seed) {
    data::Dataset ds;
    ds.x = gaussian_sample(SeededRng(seed, 0x61), cov, m);
    ds.y.resize(m);
    SeededRng label_rng(seed, 0x62);
    for (double& y : ds.y) y = label_rng.next_double() < 0.5 ? 1.0 : -1.0;
    ds.meta = {"gaussian_random_labels", seed, nn::Shape::flat(int(cov.dim()))};
    return ds;
}

bool TheoremReport::all_pass() const {
    for (const auto& c : claims)
        if (!c.pass) return false;
    return !claims.empty();
}

TheoremReport run_verify_theorems(const json& params, uint64_t seed,
                                  const std::vector<std::string>& only) {
    using ClaimFn = TheoremClaim (*)(const json&, uint64_t);
    const std::vector<std::pair<std::string, ClaimFn>> order = {
        {"A7-golden", claim_a7_golden},       {"Thm3-identity", claim_thm3_identity},
        {"Thm4-oracle", claim_thm4_oracle},   {"Lemma3", claim_lemma3},
        {"Thm1-trend", claim_thm1_trend},     {"Thm2-corr", claim_thm2_corr},
        {"Cor1-sandwich", claim_cor1_sandwich}, {"Prop1-labels", claim_prop1_labels},
        {"LinReg-delta", claim_linreg_delta},
    };
    TheoremReport report;
    for (const auto& [id, fn] : order) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        report.claims.push_back(fn(params, seed));
    }
    return report;
}

namespace {

// ---------- conjecture1 ----------

data::Dataset conjecture1_dataset(const json& p, uint64_t seed, const EigenDecomposition* g_eig) {
    int side = p.at("side").get<int>();
    int channels = p.at("data_channels").get<int>();
    std::size_t m = p.at("m").get<std::size_t>();

    std::string cifar_dir = p.value("cifar_dir", "");
    if (cifar_dir.empty())
        if (const char* env = std::getenv("GIH_CIFAR_DIR")) cifar_dir = env;
    if (!cifar_dir.empty() && fs::exists(fs::path(cifar_dir) / "data_batch_1.bin"))
        return data::load_cifar2(cifar_dir, m / 2, side, seed);

    // Fallback: anisotropic Gaussian images. The spiked variant concentrates
    // data variance on a few mid-rank eigenvectors of the initial geometry
    // over a weak isotropic background, and labels along the strongest spike:
    // a task the architecture can learn but is not yet aligned with.
    nn::Shape shape{channels, side, side};
    int dim = shape.size();
    std::string cov_kind = p.at("cov_kind").get<std::string>();
    data::Dataset base;
    base.meta = {"anisotropic_gaussian", seed, shape};
    std::vector<double> u(dim, 0.0);

    if (cov_kind == "spiked") {
        if (!g_eig) throw Error("spiked covariance needs the initial geometry spectrum");
        std::vector<int> ranks = p.at("spike_ranks").get<std::vector<int>>();
        double amp = p.at("spike_amp").get<double>();
        double bg = p.at("background_std").get<double>();
        SeededRng rng(seed, 0x63);
        base.x = Matrix(m, dim);
        for (std::size_t i = 0; i < m; ++i) {
            for (int k = 0; k < dim; ++k) base.x(i, k) = bg * rng.next_gaussian();
            for (int rank : ranks) {
                double a = amp * rng.next_gaussian();
                for (int k = 0; k < dim; ++k) base.x(i, k) += a * g_eig->vectors(k, rank);
            }
        }
        base.y.assign(m, 1.0);
        for (int k = 0; k < dim; ++k) u[k] = g_eig->vectors(k, ranks.front());
    } else {
        SymMatrix cov = cov_kind == "smooth" ? smooth_image_cov(channels, side, 3.0, 0.15)
                                             : random_anisotropic_cov(dim, seed + 0x63);
        base.x = gaussian_sample(SeededRng(seed, 0x63), cov, m);
        base.y.assign(m, 1.0);
        std::string label_dir = p.at("label_dir").get<std::string>();
        if (label_dir == "const") {
            u.assign(dim, 1.0 / std::sqrt(double(dim)));
        } else {
            // Leading data direction by power iteration on the sample covariance.
            SymMatrix cov_s = data::data_covariance(base);
            SeededRng rng(seed, 0x64);
            u = gaussian_vector(rng, dim);
            for (int it = 0; it < 100; ++it) {
                u = matvec(cov_s, u);
                double n = norm2(u);
                for (double& v : u) v /= n;
            }
        }
    }
    return data::gen_direction_labeled(base, u, 0.0, data::LabelKind::Linear,
                                       p.at("label_noise").get<double>(), seed);
}

Conjecture1Result conjecture1_impl(const json& p, uint64_t seed) {
    int side = p.at("side").get<int>();
    nn::Shape shape{p.at("data_channels").get<int>(), side, side};
    nn::ModelSpec spec = nn::make_conv2d_pool(shape, p.at("channels").get<int>(),
                                              p.at("kernel").get<int>(), 0, true);

    auto g0 = init_geometry(spec, p.at("init_models").get<std::size_t>(), seed + 1);
    EigenDecomposition g_eig = sym_eig(g0.g);
    data::Dataset ds = conjecture1_dataset(p, seed, &g_eig);

    SymMatrix s = data::data_covariance(ds);
    SymMatrix gsg = sandwich_product(g0.g, s);

    train::OptimizerConfig opt;
    opt.lr = p.at("lr").get<double>();
    opt.momentum = p.at("momentum").get<double>();
    opt.batch_size = p.at("batch").get<std::size_t>();
    opt.epochs = p.at("epochs").get<int>();
    opt.loss = train::Loss::BCE;

    std::vector<int> snaps(opt.epochs + 1);
    std::iota(snaps.begin(), snaps.end(), 0);
    auto tg = train::trajectory_geometry(
        spec, ds, opt, p.at("n_runs").get<std::size_t>(), snaps,
        geom::ProbingSpec::isotropic(1.0, p.at("probes_t").get<std::size_t>()), seed + 2);

    Conjecture1Result out;
    for (const auto& snap : tg.snapshots) {
        out.epochs.push_back(snap.t);
        out.corr_s.push_back(frobenius_corr(snap.g, s));
        out.corr_gsg.push_back(frobenius_corr(snap.g, gsg));
    }
    return out;
}

// ---------- velocity ----------

VelocityResult velocity_impl(const json& p, uint64_t seed) {
    int side = p.at("side").get<int>();
    nn::Shape shape{p.at("data_channels").get<int>(), side, side};
    nn::ModelSpec spec = nn::make_mini_resnet(shape, p.at("channels").get<int>());

    auto g0 = init_geometry(spec, p.at("init_models").get<std::size_t>(), seed + 1);
    SymMatrix flipped = geom::flip_spectrum(g0.g);

    std::size_t m = p.at("m").get<std::size_t>();
    data::Dataset ds_g = data::gen_covariance_gaussian(g0.g, m, seed + 2, shape);
    data::Dataset ds_f = data::gen_covariance_gaussian(flipped, m, seed + 3, shape);

    train::OptimizerConfig opt;
    opt.lr = p.at("lr").get<double>();
    opt.momentum = p.at("momentum").get<double>();
    opt.batch_size = p.at("batch").get<std::size_t>();
    opt.epochs = p.at("epochs").get<int>();
    opt.loss = train::Loss::BCE;

    int stride = p.at("snap_stride").get<int>();
    std::vector<int> snaps;
    for (int e = 0; e <= opt.epochs; e += stride) snaps.push_back(e);
    geom::ProbingSpec probing =
        geom::ProbingSpec::isotropic(1.0, p.at("probes_t").get<std::size_t>());
    std::size_t n_runs = p.at("n_runs").get<std::size_t>();

    auto tg_g = train::trajectory_geometry(spec, ds_g, opt, n_runs, snaps, probing, seed + 4);
    auto tg_f = train::trajectory_geometry(spec, ds_f, opt, n_runs, snaps, probing, seed + 5);

    VelocityResult out;
    out.final_acc_gcov = mean_final_train_acc(tg_g.runs);
    out.final_acc_flip = mean_final_train_acc(tg_f.runs);
    auto acc_at = [](const std::vector<train::Trajectory>& runs, int epoch) {
        std::vector<double> a;
        for (const auto& r : runs) a.push_back(r.metrics[epoch].train_acc);
        return mean_of(a);
    };
    for (std::size_t k = 1; k < tg_g.snapshots.size(); ++k) {
        int epoch = tg_g.snapshots[k].t;
        out.epochs.push_back(epoch);
        out.acc_gcov.push_back(acc_at(tg_g.runs, epoch));
        out.acc_flip.push_back(acc_at(tg_f.runs, epoch));
        out.vel_gcov.push_back(geom::geometric_velocity(tg_g.snapshots[k].g,
                                                        tg_g.snapshots[k - 1].g));
        out.vel_flip.push_back(geom::geometric_velocity(tg_f.snapshots[k].g,
                                                        tg_f.snapshots[k - 1].g));
    }
    out.mean_vel_gcov = mean_of(out.vel_gcov);
    out.mean_vel_flip = mean_of(out.vel_flip);
    return out;
}

// ---------- spectrum-labels ----------

std::vector<int> resolve_indices(const json& p, int dim) {
    std::vector<int> indices = p.at("indices").get<std::vector<int>>();
    if (indices.empty())
        indices = {0, dim / 4, dim / 2, 3 * dim / 4, dim - 1};
    for (int i : indices)
        if (i < 0 || i >= dim) throw ConfigError("eigenvector index out of range");
    return indices;
}

train::OptimizerConfig opt_from(const json& p) {
    train::OptimizerConfig opt;
    opt.lr = p.at("lr").get<double>();
    opt.momentum = p.at("momentum").get<double>();
    opt.batch_size = p.at("batch").get<std::size_t>();
    opt.epochs = p.at("epochs").get<int>();
    opt.loss = train::Loss::BCE;
    return opt;
}

std::vector<SpectrumLabelsRow> spectrum_labels_impl(const json& p, uint64_t seed) {
    int side = p.at("side").get<int>();
    nn::Shape shape{p.at("data_channels").get<int>(), side, side};
    int dim = shape.size();
    data::LabelKind kind = data::label_kind_from_string(p.at("kind").get<std::string>());
    double eps = p.at("eps").get<double>(), sigma = p.at("sigma").get<double>();
    double b = p.at("b").get<double>();
    std::size_t m_train = p.at("m_train").get<std::size_t>();
    std::size_t m_test = p.at("m_test").get<std::size_t>();
    train::OptimizerConfig opt = opt_from(p);

    std::vector<SpectrumLabelsRow> rows;
    for (const std::string& arch : p.at("arches").get<std::vector<std::string>>()) {
        nn::ModelSpec spec = arch_for(arch, shape, p.at("channels").get<int>(),
                                      p.at("mlp_widths").get<std::vector<int>>());
        auto g0 = init_geometry(spec, p.at("init_models").get<std::size_t>(), seed + 1);
        EigenDecomposition eig = sym_eig(g0.g);

        for (int index : resolve_indices(p, dim)) {
            std::vector<double> u = eig_column(eig, index);
            for (uint64_t run_seed : p.at("seeds").get<std::vector<uint64_t>>()) {
                uint64_t s_train = seed * 1000 + run_seed * 10 + index;
                data::Dataset tr = data::gen_isotropic_margin(dim, u, eps, sigma, kind, b,
                                                              m_train, s_train, shape);
                data::Dataset te = data::gen_isotropic_margin(dim, u, eps, sigma, kind, b,
                                                              m_test, s_train + 7, shape);
                auto traj = train::train(spec, tr, opt, {opt.epochs}, s_train + 13);
                SpectrumLabelsRow row;
                row.arch = arch;
                row.index = index;
                row.eigenvalue = eig.values[index];
                row.seed = run_seed;
                row.train_acc = traj.metrics.back().train_acc;
                row.test_acc = train::evaluate(spec, traj.snapshots.at(opt.epochs), te);
                rows.push_back(row);
            }
        }
    }
    return rows;
}

// ---------- sbh ----------

// gen_sbh with the two discriminants decoupled: exactly one of the linear or
// radial components carries the label, the other is driven by an independent
// coin.
data::Dataset sbh_component_set(int dim, const std::vector<double>& u1,
                                const std::vector<double>& u2, const std::vector<double>& u3,
                                double eps, double r_plus, double r_minus, double sigma_omega,
                                std::size_t m, uint64_t seed, bool linear_carries_label,
                                nn::Shape shape) {
    SeededRng rng(seed, 0x17);
    data::Dataset d;
    d.x = Matrix(m, dim);
    d.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double y = rng.next_double() < 0.5 ? 1.0 : -1.0;
        double y_other = rng.next_double() < 0.5 ? 1.0 : -1.0;
        double y_lin = linear_carries_label ? y : y_other;
        double y_rad = linear_carries_label ? y_other : y;
        double r = y_rad > 0 ? r_plus : r_minus;
        double alpha = rng.next_gaussian(), beta = rng.next_gaussian();
        double nz = std::sqrt(alpha * alpha + beta * beta);
        if (nz == 0.0) nz = 1.0;
        std::vector<double> v(dim);
        for (int k = 0; k < dim; ++k)
            v[k] = eps * y_lin * u1[k] + r * (alpha * u2[k] + beta * u3[k]) / nz;
        if (sigma_omega > 0.0) {
            std::vector<double> w = gaussian_vector(rng, dim, sigma_omega);
            double c1 = dot(w, u1), c2 = dot(w, u2), c3 = dot(w, u3);
            for (int k = 0; k < dim; ++k)
                v[k] += w[k] - c1 * u1[k] - c2 * u2[k] - c3 * u3[k];
        }
        for (int k = 0; k < dim; ++k) d.x(i, k) = v[k];
        d.y[i] = y;
    }
    d.meta = {"sbh_component", seed, shape};
    return d;
}

std::vector<SbhRow> sbh_impl(const json& p, uint64_t seed) {
    int side = p.at("side").get<int>();
    nn::Shape shape{p.at("data_channels").get<int>(), side, side};
    int dim = shape.size();
    nn::ModelSpec spec = nn::make_mini_resnet(shape, p.at("channels").get<int>());
    auto g0 = init_geometry(spec, p.at("init_models").get<std::size_t>(), seed + 1);
    EigenDecomposition eig = sym_eig(g0.g);
    std::vector<double> u2 = eig_column(eig, 0), u3 = eig_column(eig, 1);

    std::vector<int> indices = p.at("indices").get<std::vector<int>>();
    if (indices.empty()) indices = {2, dim / 4, dim / 2, 3 * dim / 4, dim - 1};

    double eps = p.at("eps").get<double>();
    double r_plus = p.at("r_plus").get<double>(), r_minus = p.at("r_minus").get<double>();
    double sigma_omega = p.at("sigma_omega").get<double>();
    std::size_t m_train = p.at("m_train").get<std::size_t>();
    std::size_t m_test = p.at("m_test").get<std::size_t>();
    train::OptimizerConfig opt = opt_from(p);

    std::vector<SbhRow> rows;
    for (int index : indices) {
        if (index < 2 || index >= dim) throw ConfigError("sbh index must be in [2, D)");
        std::vector<double> u1 = eig_column(eig, index);
        for (uint64_t run_seed : p.at("seeds").get<std::vector<uint64_t>>()) {
            uint64_t s = seed * 1000 + run_seed * 10 + index;
            data::Dataset tr = data::gen_sbh(dim, u1, u2, u3, eps, r_plus, r_minus, sigma_omega,
                                             m_train, s, shape);
            data::Dataset te_lin = sbh_component_set(dim, u1, u2, u3, eps, r_plus, r_minus,
                                                     sigma_omega, m_test, s + 7, true, shape);
            data::Dataset te_rad = sbh_component_set(dim, u1, u2, u3, eps, r_plus, r_minus,
                                                     sigma_omega, m_test, s + 8, false, shape);
            auto traj = train::train(spec, tr, opt, {{opt.epochs}}, s + 13);
            const nn::Params& params = traj.snapshots.at(opt.epochs);
            SbhRow row;
            row.index = index;
            row.eigenvalue = eig.values[index];
            row.seed = run_seed;
            row.train_acc = traj.metrics.back().train_acc;
            row.linear_acc = train::evaluate(spec, params, te_lin);
            row.nonlinear_acc = train::evaluate(spec, params, te_rad);
            rows.push_back(row);
        }
    }
    return rows;
}

// ---------- pruning experiments ----------

struct PruneSetup {
    nn::ModelSpec spec;
    geom::GeometrySnapshot g0;
    EigenDecomposition eig;
    nn::Shape shape;
    int dim = 0;
};

PruneSetup prune_setup(const json& p, uint64_t seed) {
    PruneSetup s;
    int side = p.at("side").get<int>();
    s.shape = nn::Shape{p.at("data_channels").get<int>(), side, side};
    s.dim = s.shape.size();
    s.spec = nn::make_mini_resnet(s.shape, p.at("channels").get<int>());
    s.g0 = init_geometry(s.spec, p.at("init_models").get<std::size_t>(), seed + 1);
    s.eig = sym_eig(s.g0.g);
    return s;
}

// Signal along the top geometry direction plus heavy variance in the bottom
// (low-geometry) directions; labels depend only on the signal coordinate.
data::Dataset prune_dataset(const PruneSetup& s, const json& p, std::size_t m, uint64_t seed,
                            bool junk_half_random_labels) {
    double signal = p.at("signal_scale").get<double>();
    double noise = p.at("noise").get<double>();
    std::vector<double> u_top = eig_column(s.eig, 0);

    SeededRng rng(seed, 0x70);
    data::Dataset d;
    d.x = Matrix(m, s.dim);
    d.y.resize(m);
    if (junk_half_random_labels) {
        // Half the samples live in the null-most direction with random labels.
        std::vector<double> u_null = eig_column(s.eig, s.dim - 1);
        for (std::size_t i = 0; i < m; ++i) {
            bool junk = i % 2 == 1;
            double alpha = rng.next_gaussian();
            std::vector<double> w = gaussian_vector(rng, s.dim, noise);
            const std::vector<double>& dir = junk ? u_null : u_top;
            double cdir = dot(w, dir);
            for (int k = 0; k < s.dim; ++k)
                d.x(i, k) = signal * alpha * dir[k] + (w[k] - cdir * dir[k]);
            d.y[i] = junk ? (rng.next_double() < 0.5 ? 1.0 : -1.0)
                          : (alpha >= 0 ? 1.0 : -1.0);
        }
    } else {
        int n_junk = p.at("n_junk").get<int>();
        double junk_scale = p.at("junk_scale").get<double>();
        std::vector<std::vector<double>> junk_dirs;
        for (int k = 0; k < n_junk; ++k)
            junk_dirs.push_back(eig_column(s.eig, s.dim - 1 - k));
        for (std::size_t i = 0; i < m; ++i) {
            double alpha = rng.next_gaussian();
            std::vector<double> w = gaussian_vector(rng, s.dim, noise);
            double ctop = dot(w, u_top);
            for (int k = 0; k < s.dim; ++k)
                d.x(i, k) = signal * alpha * u_top[k] + (w[k] - ctop * u_top[k]);
            for (const auto& dir : junk_dirs) {
                double beta = junk_scale * rng.next_gaussian();
                for (int k = 0; k < s.dim; ++k) d.x(i, k) += beta * dir[k];
            }
            d.y[i] = alpha >= 0 ? 1.0 : -1.0;
        }
    }
    d.meta = {"prune_synthetic", seed, s.shape};
    return d;
}

std::vector<std::vector<double>> random_orthonormal(int dim, int count, uint64_t seed) {
    SeededRng rng(seed, 0x71);
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < count; ++i) raw.push_back(gaussian_vector(rng, dim));
    return gram_schmidt(raw, 1e-10);
}

std::vector<PruneFeaturesRow> prune_features_impl(const json& p, uint64_t seed) {
    PruneSetup s = prune_setup(p, seed);
    std::size_t m_train = p.at("m_train").get<std::size_t>();
    std::size_t m_test = p.at("m_test").get<std::size_t>();
    std::size_t k = p.at("k").get<std::size_t>();
    train::OptimizerConfig opt = opt_from(p);

    std::vector<PruneFeaturesRow> rows;
    for (uint64_t run_seed : p.at("seeds").get<std::vector<uint64_t>>()) {
        uint64_t sd = seed * 1000 + run_seed;
        data::Dataset tr = prune_dataset(s, p, m_train, sd, false);
        data::Dataset te = prune_dataset(s, p, m_test, sd + 7, false);
        SymMatrix cov = data::data_covariance(tr);

        geom::GihBasis basis = geom::generalized_gih_basis(s.g0.g, cov, 1e-6);
        std::vector<std::vector<double>> rand_basis = random_orthonormal(s.dim, s.dim, sd + 3);
        std::size_t k_rand = geom::variance_matched_cutoff(cov, basis.vectors, k, rand_basis);

        data::Dataset tr_gih = geom::project_out_features(tr, basis.vectors, k);
        data::Dataset te_gih = geom::project_out_features(te, basis.vectors, k);
        data::Dataset tr_rand = geom::project_out_features(tr, rand_basis, k_rand);
        data::Dataset te_rand = geom::project_out_features(te, rand_basis, k_rand);

        PruneFeaturesRow row;
        row.seed = run_seed;
        row.k = k;
        row.k_random = k_rand;
        auto run = [&](const data::Dataset& a, const data::Dataset& b) {
            auto traj = train::train(s.spec, a, opt, {{opt.epochs}}, sd + 13);
            return train::evaluate(s.spec, traj.snapshots.at(opt.epochs), b);
        };
        row.acc_full = run(tr, te);
        row.acc_gih = run(tr_gih, te_gih);
        row.acc_random = run(tr_rand, te_rand);
        rows.push_back(row);
    }
    return rows;
}

std::vector<PruneSamplesRow> prune_samples_impl(const json& p, uint64_t seed) {
    PruneSetup s = prune_setup(p, seed);
    std::size_t m_train = p.at("m_train").get<std::size_t>();
    std::size_t m_test = p.at("m_test").get<std::size_t>();
    double fraction = p.at("fraction").get<double>();
    train::OptimizerConfig opt = opt_from(p);

    std::vector<PruneSamplesRow> rows;
    for (uint64_t run_seed : p.at("seeds").get<std::vector<uint64_t>>()) {
        uint64_t sd = seed * 1000 + run_seed;
        data::Dataset tr = prune_dataset(s, p, m_train, sd, true);
        // Clean-only test set: signal carried by the top-geometry direction.
        json clean = p;
        data::Dataset te = prune_dataset(s, clean, m_test, sd + 7, true);
        {  // keep only the signal half of the test set
            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < te.size(); i += 2) keep.push_back(i);
            Matrix x(keep.size(), te.dim());
            std::vector<double> y;
            for (std::size_t i = 0; i < keep.size(); ++i) {
                for (std::size_t j = 0; j < te.dim(); ++j) x(i, j) = te.x(keep[i], j);
                y.push_back(te.y[keep[i]]);
            }
            te.x = std::move(x);
            te.y = std::move(y);
        }

        data::Dataset tr_score = geom::prune_samples(tr, s.g0.g, fraction,
                                                     geom::PruneMode::Score, sd + 3);
        data::Dataset tr_rand = geom::prune_samples(tr, s.g0.g, fraction,
                                                    geom::PruneMode::Random, sd + 3);
        PruneSamplesRow row;
        row.seed = run_seed;
        row.fraction = fraction;
        auto run = [&](const data::Dataset& a) {
            auto traj = train::train(s.spec, a, opt, {{opt.epochs}}, sd + 13);
            return train::evaluate(s.spec, traj.snapshots.at(opt.epochs), te);
        };
        row.acc_full = run(tr);
        row.acc_score = run(tr_score);
        row.acc_random = run(tr_rand);
        rows.push_back(row);
    }
    return rows;
}

// ---------- geometry-heatmap ----------

void geometry_heatmap_impl(const json& p, uint64_t seed, const fs::path& out) {
    nn::ModelSpec spec;
    std::string path = p.value("model_path", "");
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("model spec file not found: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        spec = nn::spec_from_json(ss.str());
    } else {
        std::string builtin = p.value("model", "a7");
        if (builtin == "a7") {
            spec = nn::make_conv1d_pool_single(3, 2);
            spec.final_std = 2.0;
        } else if (builtin == "miniresnet") {
            spec = nn::make_mini_resnet(nn::Shape{3, 8, 8}, 8);
        } else {
            throw ConfigError("unknown builtin model: " + builtin);
        }
    }
    auto snap = geom::estimate_avg_geometry(
        spec,
        geom::ParamSource::fresh_init(p.at("n_models").get<std::size_t>(), seed),
        geom::ProbingSpec::isotropic(p.at("sigma_probe").get<double>(),
                                     p.at("probes").get<std::size_t>()));
    geom::save_snapshot(snap, out / "geometry", seed);
    EigenDecomposition eig = sym_eig(snap.g);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < eig.values.size(); ++i)
        rows.push_back({std::to_string(i), csv_cell(eig.values[i])});
    write_csv(out / "eigenvalues.csv", {"index", "eigenvalue"}, rows);

    svg::write_heatmap(out / "heatmap.svg", "average geometry", snap.g.to_matrix());
    PlotSpec plot;
    plot.title = "geometry spectrum";
    plot.x_column = "index";
    plot.x_label = "index";
    plot.y_label = "eigenvalue";
    plot.series = {{"eigenvalue", "eigenvalue"}};
    render_report(out / "eigenvalues.csv", plot, out / "spectrum.svg");
}

// ---------- manifest + dispatch ----------

struct DirLock {
    int fd = -1;
    explicit DirLock(const fs::path& dir) {
        fs::create_directories(dir);
        fd = ::open((dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd < 0) throw IoError("cannot create lock file in " + dir.string());
        if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd);
            throw IoError("output directory is locked by another process: " + dir.string());
        }
    }
    ~DirLock() {
        if (fd >= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
    }
};

void write_manifest(const fs::path& out, const std::string& id, const json& params,
                    uint64_t seed, int threads) {
    json manifest = {{"id", id},
                     {"target", experiment_target(id)},
                     {"params", params},
                     {"seed", seed},
                     {"threads", threads},
                     {"content_hash", content_hash(id + params.dump() + std::to_string(seed))}};
    std::ofstream f(out / "manifest.json");
    if (!f) throw IoError("cannot write manifest");
    f << manifest.dump(2) << '\n';
}

}  // namespace

std::vector<std::string> experiment_ids() {
    std::vector<std::string> ids;
    for (const auto& [id, info] : registry()) ids.push_back(id);
    return ids;
}

bool is_known_experiment(const std::string& id) { return registry().count(id) > 0; }

std::string experiment_target(const std::string& id) {
    auto it = registry().find(id);
    if (it == registry().end()) throw ConfigError("unknown experiment id: " + id);
    return it->second.target;
}

json default_params(const std::string& id) {
    auto it = registry().find(id);
    if (it == registry().end()) throw ConfigError("unknown experiment id: " + id);
    return it->second.defaults;
}

Conjecture1Result run_conjecture1(const json& params, uint64_t seed) {
    return conjecture1_impl(params, seed);
}
VelocityResult run_velocity(const json& params, uint64_t seed) {
    return velocity_impl(params, seed);
}
std::vector<SpectrumLabelsRow> run_spectrum_labels(const json& params, uint64_t seed) {
    return spectrum_labels_impl(params, seed);
}
std::vector<SbhRow> run_sbh(const json& params, uint64_t seed) { return sbh_impl(params, seed); }
std::vector<PruneFeaturesRow> run_prune_features(const json& params, uint64_t seed) {
    return prune_features_impl(params, seed);
}
std::vector<PruneSamplesRow> run_prune_samples(const json& params, uint64_t seed) {
    return prune_samples_impl(params, seed);
}

fs::path render_report(const fs::path& csv, const PlotSpec& spec, const fs::path& out_svg) {
    if (spec.kind == PlotSpec::Kind::Heatmap) {
        Matrix m = load_matrix_csv(csv);
        if (m.rows() == 0) throw Error("render_report: empty CSV");
        svg::write_heatmap(out_svg, spec.title, m);
        return out_svg;
    }
    CsvTable t = read_csv(csv);
    if (t.rows.empty()) throw Error("render_report: empty CSV");
    std::size_t xc = t.col(spec.x_column);
    std::vector<svg::Series> series;
    for (const auto& [column, label] : spec.series) {
        svg::Series s;
        s.label = label;
        std::size_t c = t.col(column);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            s.x.push_back(t.value(r, xc));
            s.y.push_back(t.value(r, c));
        }
        series.push_back(std::move(s));
    }
    svg::write_line_chart(out_svg, spec.title, spec.x_column, spec.y_label, series);
    return out_svg;
}

fs::path run_experiment(const ExperimentConfig& config) {
    if (!is_known_experiment(config.id))
        throw ConfigError("unknown experiment id: " + config.id);
    json params = default_params(config.id);
    params.update(config.params);

    DirLock lock(config.out_dir);
    if (config.threads > 0) set_thread_count(config.threads);
    const fs::path out = config.out_dir;
    write_manifest(out, config.id, params, config.seed, thread_count());

    if (config.id == "verify-theorems") {
        TheoremReport report = run_verify_theorems(params, config.seed);
        std::vector<std::vector<std::string>> rows;
        for (const auto& c : report.claims)
            rows.push_back({c.id, csv_cell(c.analytic), csv_cell(c.mc), csv_cell(c.tolerance),
                            c.pass ? "pass" : "fail"});
        write_csv(out / "report.csv", {"claim", "analytic", "mc", "tolerance", "pass"}, rows);
    } else if (config.id == "conjecture1") {
        Conjecture1Result r = run_conjecture1(params, config.seed);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < r.epochs.size(); ++i)
            rows.push_back({std::to_string(r.epochs[i]), csv_cell(r.corr_s[i]),
                            csv_cell(r.corr_gsg[i])});
        write_csv(out / "correlation.csv", {"epoch", "corr_Gt_S", "corr_Gt_GSG"}, rows);
        PlotSpec plot;
        plot.title = "geometry correlation during training";
        plot.x_column = "epoch";
        plot.y_label = "correlation";
        plot.series = {{"corr_Gt_S", "Corr(G^t,S)"}, {"corr_Gt_GSG", "Corr(G^t,GSG)"}};
        render_report(out / "correlation.csv", plot, out / "correlation.svg");
    } else if (config.id == "velocity") {
        VelocityResult r = run_velocity(params, config.seed);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < r.epochs.size(); ++i)
            rows.push_back({std::to_string(r.epochs[i]), csv_cell(r.acc_gcov[i]),
                            csv_cell(r.vel_gcov[i]), csv_cell(r.acc_flip[i]),
                            csv_cell(r.vel_flip[i])});
        write_csv(out / "velocity.csv",
                  {"epoch", "train_acc_gcov", "velocity_gcov", "train_acc_flipcov",
                   "velocity_flipcov"},
                  rows);
        PlotSpec plot;
        plot.title = "geometric velocity";
        plot.x_column = "epoch";
        plot.y_label = "velocity";
        plot.series = {{"velocity_gcov", "matched covariance"},
                       {"velocity_flipcov", "flipped covariance"}};
        render_report(out / "velocity.csv", plot, out / "velocity.svg");
        PlotSpec acc_plot;
        acc_plot.title = "train accuracy";
        acc_plot.x_column = "epoch";
        acc_plot.y_label = "accuracy";
        acc_plot.series = {{"train_acc_gcov", "matched covariance"},
                           {"train_acc_flipcov", "flipped covariance"}};
        render_report(out / "velocity.csv", acc_plot, out / "train_accuracy.svg");
    } else if (config.id == "spectrum-labels") {
        auto rows = run_spectrum_labels(params, config.seed);
        std::vector<std::vector<std::string>> csv_rows;
        for (const auto& r : rows)
            csv_rows.push_back({r.arch, std::to_string(r.index), csv_cell(r.eigenvalue),
                                std::to_string(r.seed), csv_cell(r.train_acc),
                                csv_cell(r.test_acc)});
        write_csv(out / "accuracy.csv",
                  {"arch", "index", "eigenvalue", "seed", "train_acc", "test_acc"}, csv_rows);

        // Per-arch seed means, pivoted for plotting.
        std::map<int, std::map<std::string, std::pair<double, int>>> agg;
        std::vector<std::string> arches;
        for (const auto& r : rows) {
            auto& cell = agg[r.index][r.arch];
            cell.first += r.test_acc;
            cell.second += 1;
            if (std::find(arches.begin(), arches.end(), r.arch) == arches.end())
                arches.push_back(r.arch);
        }
        std::vector<std::string> cols = {"index"};
        for (const auto& a : arches) cols.push_back(a + "_test_acc");
        std::vector<std::vector<std::string>> srows;
        for (const auto& [index, per_arch] : agg) {
            std::vector<std::string> row = {std::to_string(index)};
            for (const auto& a : arches) {
                auto it = per_arch.find(a);
                row.push_back(it == per_arch.end()
                                  ? "0"
                                  : csv_cell(it->second.first / it->second.second));
            }
            srows.push_back(row);
        }
        write_csv(out / "summary.csv", cols, srows);
        PlotSpec plot;
        plot.title = "test accuracy vs eigenvector rank";
        plot.x_column = "index";
        plot.y_label = "test accuracy";
        for (const auto& a : arches) plot.series.push_back({a + "_test_acc", a});
        render_report(out / "summary.csv", plot, out / "summary.svg");
    } else if (config.id == "sbh") {
        auto rows = run_sbh(params, config.seed);
        std::vector<std::vector<std::string>> csv_rows;
        for (const auto& r : rows)
            csv_rows.push_back({std::to_string(r.index), csv_cell(r.eigenvalue),
                                std::to_string(r.seed), csv_cell(r.train_acc),
                                csv_cell(r.linear_acc), csv_cell(r.nonlinear_acc)});
        write_csv(out / "components.csv",
                  {"index", "eigenvalue", "seed", "train_acc", "linear_acc", "nonlinear_acc"},
                  csv_rows);
        std::map<int, std::array<double, 3>> agg;  // sums of lin, nonlin, count
        for (const auto& r : rows) {
            auto& a = agg[r.index];
            a[0] += r.linear_acc;
            a[1] += r.nonlinear_acc;
            a[2] += 1;
        }
        std::vector<std::vector<std::string>> srows;
        for (const auto& [index, a] : agg)
            srows.push_back({std::to_string(index), csv_cell(a[0] / a[2]), csv_cell(a[1] / a[2])});
        write_csv(out / "summary.csv", {"index", "linear_acc", "nonlinear_acc"}, srows);
        PlotSpec plot;
        plot.title = "component reliance vs eigenvector rank";
        plot.x_column = "index";
        plot.y_label = "test accuracy";
        plot.series = {{"linear_acc", "linear component"},
                       {"nonlinear_acc", "non-linear component"}};
        render_report(out / "summary.csv", plot, out / "summary.svg");
    } else if (config.id == "prune-features") {
        auto rows = run_prune_features(params, config.seed);
        std::vector<std::vector<std::string>> csv_rows;
        for (const auto& r : rows)
            csv_rows.push_back({std::to_string(r.seed), std::to_string(r.k),
                                std::to_string(r.k_random), csv_cell(r.acc_full),
                                csv_cell(r.acc_gih), csv_cell(r.acc_random)});
        write_csv(out / "results.csv",
                  {"seed", "k", "k_random", "acc_full", "acc_gih", "acc_random"}, csv_rows);
        PlotSpec plot;
        plot.title = "feature elimination";
        plot.x_column = "seed";
        plot.y_label = "test accuracy";
        plot.series = {{"acc_full", "no projection"},
                       {"acc_gih", "generalized basis"},
                       {"acc_random", "random, variance-matched"}};
        render_report(out / "results.csv", plot, out / "results.svg");
    } else if (config.id == "prune-samples") {
        auto rows = run_prune_samples(params, config.seed);
        std::vector<std::vector<std::string>> csv_rows;
        for (const auto& r : rows)
            csv_rows.push_back({std::to_string(r.seed), csv_cell(r.fraction),
                                csv_cell(r.acc_full), csv_cell(r.acc_score),
                                csv_cell(r.acc_random)});
        write_csv(out / "results.csv", {"seed", "fraction", "acc_full", "acc_score", "acc_random"},
                  csv_rows);
        PlotSpec plot;
        plot.title = "sample pruning";
        plot.x_column = "seed";
        plot.y_label = "test accuracy";
        plot.series = {{"acc_full", "no pruning"},
                       {"acc_score", "score pruning"},
                       {"acc_random", "random pruning"}};
        render_report(out / "results.csv", plot, out / "results.svg");
    } else if (config.id == "geometry-heatmap") {
        geometry_heatmap_impl(params, config.seed, out);
    }
    return out;
}

double sbh_reliance_spearman(const std::vector<SbhRow>& rows) {
    std::map<int, std::pair<double, int>> agg;
    for (const auto& r : rows) {
        agg[r.index].first += r.linear_acc;
        agg[r.index].second += 1;
    }
    std::vector<double> position, reliance;
    for (const auto& [index, sum_count] : agg) {
        position.push_back(double(index));
        reliance.push_back(sum_count.first / sum_count.second);
    }
    return spearman(position, reliance);
}

}  // namespace gih::harness
