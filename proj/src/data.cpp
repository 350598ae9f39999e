#include "gih/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "gih/error.hpp"
#include "gih/linalg.hpp"
#include "gih/sampling.hpp"
#include "gih/serialize.hpp"

namespace gih::data {

using json = nlohmann::json;

std::vector<double> Dataset::sample(std::size_t i) const {
    return std::vector<double>(x.row(i), x.row(i) + x.cols());
}

void Dataset::validate() const {
    if (x.rows() < 1) throw Error("dataset: empty");
    if (x.rows() != y.size()) throw Error("dataset: label count mismatch");
    if (!x.all_finite()) throw Error("dataset: non-finite inputs");
    for (double v : y)
        if (v != 1.0 && v != -1.0) throw Error("dataset: labels must be +-1");
}

DirectionSet::DirectionSet(std::vector<std::vector<double>> dirs) : u(std::move(dirs)) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(norm2(u[i]) - 1.0) > 1e-10) throw Error("direction set: non-unit vector");
        for (std::size_t j = i + 1; j < u.size(); ++j)
            if (u[j].size() != u[i].size() || std::abs(dot(u[i], u[j])) > 1e-10)
                throw Error("direction set: directions not orthonormal");
    }
}

LabelKind label_kind_from_string(const std::string& s) {
    if (s == "linear") return LabelKind::Linear;
    if (s == "quadratic") return LabelKind::Quadratic;
    if (s == "sinusoidal") return LabelKind::Sinusoidal;
    throw ConfigError("unknown label kind: " + s);
}

std::string to_string(LabelKind k) {
    switch (k) {
        case LabelKind::Linear: return "linear";
        case LabelKind::Quadratic: return "quadratic";
        default: return "sinusoidal";
    }
}

ChannelStats channel_stats(const Dataset& d) {
    nn::Shape shape = d.meta.shape;
    if (shape.size() != static_cast<int>(d.dim())) shape = nn::Shape::flat(int(d.dim()));
    int area = shape.h * shape.w;
    ChannelStats st;
    st.mean.assign(shape.c, 0.0);
    st.std.assign(shape.c, 0.0);
    std::size_t n_per_channel = d.size() * area;
    for (int c = 0; c < shape.c; ++c) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double* row = d.x.row(i) + c * area;
            for (int k = 0; k < area; ++k) {
                s += row[k];
                s2 += row[k] * row[k];
            }
        }
        double mean = s / n_per_channel;
        double var = s2 / n_per_channel - mean * mean;
        st.mean[c] = mean;
        st.std[c] = std::sqrt(std::max(var, 1e-300));
    }
    return st;
}

namespace {

nn::Shape shape_or_flat(nn::Shape shape, int dim) {
    if (shape.size() == dim) return shape;
    return nn::Shape::flat(dim);
}

double label_value(LabelKind kind, double margin, double b) {
    double t;
    switch (kind) {
        case LabelKind::Linear: t = margin + b; break;
        case LabelKind::Quadratic: t = margin * margin + b; break;
        default: t = std::sin(margin) + b; break;
    }
    return t >= 0.0 ? 1.0 : -1.0;
}

void check_two_classes(const std::vector<double>& y) {
    bool pos = false, neg = false;
    for (double v : y) (v > 0 ? pos : neg) = true;
    if (!pos || !neg)
        throw DegenerateLabelingError("labeling produced a single class");
}

}  // namespace

Dataset gen_circles(int dim, const std::vector<double>& u1, const std::vector<double>& u2,
                    double r_plus, double r_minus, std::size_t m, double sigma_noise,
                    uint64_t seed) {
    DirectionSet dirs({u1, u2});  // throws unless orthonormal
    if (r_plus == r_minus) throw Error("gen_circles: radii must differ");
    if (sigma_noise < 0.0) throw Error("gen_circles: negative noise std");

    SeededRng rng(seed, 0x11);
    Dataset d;
    d.x = Matrix(m, dim);
    d.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double y = (i % 2 == 0) ? 1.0 : -1.0;
        double r = y > 0 ? r_plus : r_minus;
        double phi = 2.0 * M_PI * rng.next_double();
        std::vector<double> v(dim);
        for (int k = 0; k < dim; ++k)
            v[k] = r * (std::cos(phi) * u1[k] + std::sin(phi) * u2[k]);
        if (sigma_noise > 0.0) {
            std::vector<double> w = gaussian_vector(rng, dim, sigma_noise);
            // Project the noise onto the complement of span(u1, u2).
            double c1 = dot(w, u1), c2 = dot(w, u2);
            for (int k = 0; k < dim; ++k) v[k] += w[k] - c1 * u1[k] - c2 * u2[k];
        }
        for (int k = 0; k < dim; ++k) d.x(i, k) = v[k];
        d.y[i] = y;
    }
    d.meta = {"circles", seed, nn::Shape::flat(dim)};
    return d;
}

Dataset gen_direction_labeled(const Dataset& base, const std::vector<double>& u, double b,
                              LabelKind kind, double label_noise_ratio, uint64_t seed,
                              const ChannelStats* stats) {
    base.validate();
    if (u.size() != base.dim()) throw ShapeError("gen_direction_labeled: direction size mismatch");
    if (std::abs(norm2(u) - 1.0) > 1e-8) throw Error("gen_direction_labeled: u must be unit");

    nn::Shape shape = shape_or_flat(base.meta.shape, int(base.dim()));
    int area = shape.h * shape.w;
    ChannelStats own;
    if (!stats) {
        own = channel_stats(base);
        stats = &own;
    }
    // Label-noise std per channel: variance = ratio * channel variance.
    std::vector<double> noise_std(shape.c, 0.0);
    if (label_noise_ratio > 0.0) {
        ChannelStats cur = channel_stats(base);
        for (int c = 0; c < shape.c; ++c)
            noise_std[c] = std::sqrt(label_noise_ratio) * cur.std[c];
    }

    SeededRng rng(seed, 0x12);
    Dataset d;
    d.x = base.x;  // inputs bit-identical to the base
    d.y.resize(base.size());
    std::vector<double> z(base.dim());
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (std::size_t k = 0; k < base.dim(); ++k) z[k] = base.x(i, k);
        if (label_noise_ratio > 0.0)
            for (int c = 0; c < shape.c; ++c)
                for (int k = 0; k < area; ++k)
                    z[c * area + k] += noise_std[c] * rng.next_gaussian();
        double margin;
        if (kind == LabelKind::Sinusoidal) {
            double s = 0.0;
            for (int c = 0; c < shape.c; ++c)
                for (int k = 0; k < area; ++k)
                    s += u[c * area + k] * (z[c * area + k] - stats->mean[c]) / stats->std[c];
            margin = s;
        } else {
            margin = dot(z, u);
        }
        d.y[i] = label_value(kind, margin, b);
    }
    check_two_classes(d.y);
    d.meta = {"direction_labeled_" + to_string(kind), seed, shape};
    return d;
}

Dataset gen_direction_labeled(const SymMatrix& cov, std::size_t m, const std::vector<double>& u,
                              double b, LabelKind kind, double label_noise_ratio, uint64_t seed) {
    Dataset base;
    base.x = gaussian_sample(SeededRng(seed, 0x13), cov, m);
    base.y.assign(m, 1.0);
    base.meta = {"gaussian", seed, nn::Shape::flat(int(cov.dim()))};
    return gen_direction_labeled(base, u, b, kind, label_noise_ratio, seed);
}

Dataset gen_isotropic_margin(int dim, const std::vector<double>& u, double eps, double sigma,
                             LabelKind kind, double b, std::size_t m, uint64_t seed,
                             nn::Shape shape) {
    if (std::abs(norm2(u) - 1.0) > 1e-8) throw Error("gen_isotropic_margin: u must be unit");
    if (eps <= 0.0 || sigma <= 0.0) throw Error("gen_isotropic_margin: eps and sigma must be > 0");
    shape = shape_or_flat(shape, dim);

    SeededRng rng(seed, 0x14);
    Dataset d;
    d.x = Matrix(m, dim);
    d.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double alpha = rng.next_gaussian();
        std::vector<double> w = gaussian_vector(rng, dim, sigma);
        double cu = dot(w, u);
        for (int k = 0; k < dim; ++k) d.x(i, k) = eps * alpha * u[k] + (w[k] - cu * u[k]);
    }
    d.meta = {"isotropic_margin_" + to_string(kind), seed, shape};
    if (kind == LabelKind::Sinusoidal) {
        ChannelStats st = channel_stats(d);
        int area = shape.h * shape.w;
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (int c = 0; c < shape.c; ++c)
                for (int k = 0; k < area; ++k)
                    s += u[c * area + k] * (d.x(i, c * area + k) - st.mean[c]) / st.std[c];
            d.y[i] = label_value(kind, s, b);
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            double margin = 0.0;
            for (int k = 0; k < dim; ++k) margin += d.x(i, k) * u[k];
            d.y[i] = label_value(kind, margin, b);
        }
    }
    check_two_classes(d.y);
    return d;
}

Dataset gen_sbh(int dim, const std::vector<double>& u1, const std::vector<double>& u2,
                const std::vector<double>& u3, double eps, double r_plus, double r_minus,
                double sigma_omega, std::size_t m, uint64_t seed, nn::Shape shape) {
    DirectionSet dirs({u1, u2, u3});
    if (r_plus == r_minus) throw Error("gen_sbh: radii must differ");
    shape = shape_or_flat(shape, dim);

    SeededRng rng(seed, 0x15);
    Dataset d;
    d.x = Matrix(m, dim);
    d.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double y = rng.next_double() < 0.5 ? 1.0 : -1.0;
        double r = y > 0 ? r_plus : r_minus;
        double alpha = rng.next_gaussian();
        double beta = rng.next_gaussian();
        double nz = std::sqrt(alpha * alpha + beta * beta);
        if (nz == 0.0) nz = 1.0;
        std::vector<double> v(dim);
        for (int k = 0; k < dim; ++k)
            v[k] = eps * y * u1[k] + r * (alpha * u2[k] + beta * u3[k]) / nz;
        if (sigma_omega > 0.0) {
            std::vector<double> w = gaussian_vector(rng, dim, sigma_omega);
            double c1 = dot(w, u1), c2 = dot(w, u2), c3 = dot(w, u3);
            for (int k = 0; k < dim; ++k)
                v[k] += w[k] - c1 * u1[k] - c2 * u2[k] - c3 * u3[k];
        }
        for (int k = 0; k < dim; ++k) d.x(i, k) = v[k];
        d.y[i] = y;
    }
    d.meta = {"sbh", seed, shape};
    return d;
}

Dataset gen_covariance_gaussian(const SymMatrix& cov, std::size_t m, uint64_t seed,
                                nn::Shape shape) {
    EigenDecomposition eig = sym_eig(cov);
    double spectral = eig.values.empty() ? 0.0 : std::max(eig.values.front(), 0.0);
    if (spectral <= 0.0) throw Error("gen_covariance_gaussian: covariance has no positive spectrum");
    SymMatrix scaled = cov * (1.0 / spectral);

    SeededRng rng(seed, 0x16);
    Dataset d;
    d.x = gaussian_sample(rng.derive(0), scaled, m);
    d.y.resize(m);
    SeededRng label_rng = rng.derive(1);
    for (std::size_t i = 0; i < m; ++i) d.y[i] = label_rng.next_double() < 0.5 ? 1.0 : -1.0;
    d.meta = {"covariance_gaussian", seed, shape_or_flat(shape, int(cov.dim()))};
    return d;
}

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPerFile = 10000;
constexpr int kCifarSide = 32;

bool is_animal_class(int label) { return label >= 2 && label <= 7; }

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open: " + p.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

Dataset load_cifar2(const std::filesystem::path& dir, std::size_t per_class, int downsample,
                    uint64_t seed, bool test_split) {
    std::vector<std::filesystem::path> files;
    if (test_split) {
        files.push_back(dir / "test_batch.bin");
    } else {
        for (int i = 1; i <= 5; ++i)
            files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    }
    for (const auto& f : files)
        if (!std::filesystem::exists(f)) throw IoError("missing CIFAR file: " + f.string());

    int side = downsample > 0 ? downsample : kCifarSide;
    if (kCifarSide % side != 0)
        throw ConfigError("downsample side must divide 32");
    int block = kCifarSide / side;
    int dim = side * side * 3;

    std::vector<std::vector<double>> pool_x[2];  // [0] -1 class, [1] +1 class
    for (const auto& f : files) {
        std::vector<unsigned char> bytes = read_file_bytes(f);
        if (bytes.size() != kCifarRecord * kCifarPerFile)
            throw FormatError("bad CIFAR file length: " + f.string());
        for (std::size_t r = 0; r < kCifarPerFile; ++r) {
            const unsigned char* rec = bytes.data() + r * kCifarRecord;
            int label = rec[0];
            if (label > 9) throw FormatError("bad CIFAR label byte in " + f.string());
            std::vector<double> img(dim, 0.0);
            for (int c = 0; c < 3; ++c)
                for (int oy = 0; oy < side; ++oy)
                    for (int ox = 0; ox < side; ++ox) {
                        double s = 0.0;
                        for (int by = 0; by < block; ++by)
                            for (int bx = 0; bx < block; ++bx) {
                                int iy = oy * block + by, ix = ox * block + bx;
                                s += rec[1 + c * 1024 + iy * kCifarSide + ix];
                            }
                        img[(c * side + oy) * side + ox] = s / (block * block * 255.0);
                    }
            pool_x[is_animal_class(label) ? 1 : 0].push_back(std::move(img));
        }
    }

    Dataset d;
    d.x = Matrix(0, 0);
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    for (int cls = 1; cls >= 0; --cls) {
        auto& pool = pool_x[cls];
        if (pool.size() < per_class)
            throw Error("not enough CIFAR samples in class");
        // Seed-deterministic draw: Fisher-Yates prefix of the class pool.
        SeededRng rng(seed, 0x20 + cls);
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < per_class; ++i) {
            std::size_t j = i + rng.next_below(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < per_class; ++i) {
            rows.push_back(pool[idx[i]]);
            labels.push_back(cls == 1 ? 1.0 : -1.0);
        }
    }
    d.x = Matrix(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int k = 0; k < dim; ++k) d.x(i, k) = rows[i][k];
    d.y = std::move(labels);
    d.meta = {"cifar2", seed, nn::Shape{3, side, side}};
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_matrix_bin(d.x, dir / "x.bin");
    std::ofstream yf(dir / "y.csv");
    if (!yf) throw IoError("cannot write labels");
    for (double v : d.y) yf << (v > 0 ? "1" : "-1") << '\n';
    json meta = {{"generator", d.meta.generator},
                 {"seed", d.meta.seed},
                 {"channels", d.meta.shape.c},
                 {"height", d.meta.shape.h},
                 {"width", d.meta.shape.w}};
    std::ofstream mf(dir / "meta.json");
    mf << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset d;
    d.x = load_matrix_bin(dir / "x.bin");
    std::ifstream yf(dir / "y.csv");
    if (!yf) throw IoError("cannot read labels");
    std::string line;
    while (std::getline(yf, line))
        if (!line.empty()) d.y.push_back(std::stod(line));
    std::ifstream mf(dir / "meta.json");
    if (mf) {
        json meta = json::parse(mf);
        d.meta.generator = meta.value("generator", "");
        d.meta.seed = meta.value("seed", 0ULL);
        d.meta.shape = nn::Shape{meta.value("channels", 1), meta.value("height", 1),
                                 meta.value("width", int(d.x.cols()))};
    } else {
        d.meta.shape = nn::Shape::flat(int(d.x.cols()));
    }
    d.validate();
    return d;
}

SymMatrix data_covariance(const Dataset& d) {
    if (d.size() == 0) throw Error("data_covariance: empty dataset");
    std::size_t dim = d.dim();
    SymMatrix s(dim);
    for (std::size_t r = 0; r < d.size(); ++r) {
        const double* row = d.x.row(r);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j <= i; ++j) s(i, j) += row[i] * row[j];
    }
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < i; ++j) s(j, i) = s(i, j);
    return s;
}

}  // namespace gih::data
