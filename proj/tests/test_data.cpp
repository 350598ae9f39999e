#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gih/data.hpp"
#include "gih/linalg.hpp"
#include "gih/sampling.hpp"

using namespace gih;
using namespace gih::data;

namespace {

std::vector<double> unit(int dim, int axis) {
    std::vector<double> u(dim, 0.0);
    u[axis] = 1.0;
    return u;
}

double proj_norm(const std::vector<double>& x, const std::vector<double>& u1,
                 const std::vector<double>& u2) {
    double a = dot(x, u1), b = dot(x, u2);
    return std::sqrt(a * a + b * b);
}

std::filesystem::path make_fake_cifar(bool truncate_last = false) {
    auto dir = std::filesystem::temp_directory_path() /
               (truncate_last ? "gih_cifar_bad" : "gih_cifar_ok");
    std::filesystem::create_directories(dir);
    SeededRng rng(1234);
    for (int f = 1; f <= 5; ++f) {
        std::ofstream out(dir / ("data_batch_" + std::to_string(f) + ".bin"), std::ios::binary);
        std::size_t records = (truncate_last && f == 5) ? 9999 : 10000;
        for (std::size_t r = 0; r < records; ++r) {
            unsigned char label = static_cast<unsigned char>(rng.next_below(10));
            out.put(static_cast<char>(label));
            for (int i = 0; i < 3072; ++i)
                out.put(static_cast<char>(rng.next_below(256)));
        }
    }
    return dir;
}

}  // namespace

TEST_CASE("gen_circles: radii, complement noise, balance") {
    const int dim = 16;
    auto u1 = unit(dim, 0), u2 = unit(dim, 1);

    Dataset clean = gen_circles(dim, u1, u2, 2.0, 1.0, 101, 0.0, 5);
    int pos = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        auto x = clean.sample(i);
        double r = proj_norm(x, u1, u2);
        CHECK(r == doctest::Approx(clean.y[i] > 0 ? 2.0 : 1.0).epsilon(1e-12));
        if (clean.y[i] > 0) ++pos;
    }
    CHECK(std::abs(2 * pos - int(clean.size())) <= 1);

    const double sigma = 0.3;
    Dataset noisy = gen_circles(dim, u1, u2, 2.0, 1.0, 10000, sigma, 6);
    for (int axis = 2; axis < 5; ++axis) {
        double s2 = 0;
        for (std::size_t i = 0; i < noisy.size(); ++i)
            s2 += noisy.x(i, axis) * noisy.x(i, axis);
        CHECK(std::abs(std::sqrt(s2 / noisy.size()) - sigma) < 0.05 * sigma);
    }

    std::vector<double> not_unit(dim, 0.0);
    not_unit[0] = 2.0;
    CHECK_THROWS_AS(gen_circles(dim, not_unit, u2, 2.0, 1.0, 10, 0.0, 7), Error);
}

TEST_CASE("gen_direction_labeled: closed-form labels, inputs untouched") {
    Dataset base;
    base.x = Matrix(2, 2);
    base.x(0, 0) = 3;
    base.x(0, 1) = -1;
    base.x(1, 0) = -2;
    base.x(1, 1) = 5;
    base.y = {1.0, 1.0};
    base.meta.shape = nn::Shape::flat(2);

    Dataset lin = gen_direction_labeled(base, {1.0, 0.0}, 0.0, LabelKind::Linear, 0.0, 1);
    CHECK(lin.y[0] == 1.0);
    CHECK(lin.y[1] == -1.0);
    CHECK(lin.x.data() == base.x.data());

    // quadratic: (x.u)^2 + b
    Dataset quad_base;
    quad_base.x = Matrix(2, 2);
    quad_base.x(0, 0) = 2.0;   // margin^2 = 4
    quad_base.x(1, 0) = 0.5;   // margin^2 = 0.25
    quad_base.y = {1.0, 1.0};
    quad_base.meta.shape = nn::Shape::flat(2);
    Dataset quad = gen_direction_labeled(quad_base, {1.0, 0.0}, -1.0, LabelKind::Quadratic, 0.0, 2);
    CHECK(quad.y[0] == 1.0);
    CHECK(quad.y[1] == -1.0);

    Dataset ones;
    ones.x = Matrix(4, 2, 1.0);
    ones.y = {1, 1, 1, 1};
    ones.meta.shape = nn::Shape::flat(2);
    CHECK_THROWS_AS(gen_direction_labeled(ones, {1.0, 0.0}, 0.0, LabelKind::Linear, 0.0, 3),
                    DegenerateLabelingError);
}

TEST_CASE("gen_direction_labeled: label-noise flip rate matches a resampling oracle") {
    const int dim = 4;
    const std::size_t m = 20000;
    SymMatrix cov = SymMatrix::identity(dim);
    Dataset base;
    base.x = gaussian_sample(SeededRng(50), cov, m);
    base.y.assign(m, 1.0);
    base.meta.shape = nn::Shape::flat(dim);
    std::vector<double> u = unit(dim, 0);

    Dataset noiseless = gen_direction_labeled(base, u, 0.0, LabelKind::Linear, 0.0, 51);
    Dataset noisy = gen_direction_labeled(base, u, 0.0, LabelKind::Linear, 0.2, 51);
    CHECK(noisy.x.data() == base.x.data());

    double flips = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (noisy.y[i] != noiseless.y[i]) flips += 1;
    double observed = flips / double(m);

    // Oracle: P(sign(z + eta) != sign(z)), z ~ N(0,1), eta ~ N(0, 0.2), by resampling.
    SeededRng rng(52);
    double expect = 0;
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) {
        double z = rng.next_gaussian();
        double eta = std::sqrt(0.2) * rng.next_gaussian();
        if ((z >= 0) != (z + eta >= 0)) expect += 1;
    }
    expect /= trials;
    CHECK(std::abs(observed - expect) < 0.01);
}

TEST_CASE("gen_isotropic_margin: covariance structure") {
    const int dim = 12;
    auto u = unit(dim, 3);
    const double eps = 2.0, sigma = 1.0;
    Dataset ds = gen_isotropic_margin(dim, u, eps, sigma, LabelKind::Linear, 0.0, 10000, 9);

    // Empirical covariance ~ eps^2 u u^T + sigma^2 (I - u u^T).
    for (int i = 0; i < dim; ++i) {
        double s2 = 0;
        for (std::size_t r = 0; r < ds.size(); ++r) s2 += ds.x(r, i) * ds.x(r, i);
        double var = s2 / ds.size();
        double want = (i == 3) ? eps * eps : sigma * sigma;
        CHECK(std::abs(var - want) < 0.05 * want * 2);
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double margin = ds.x(i, 3);
        CHECK(ds.y[i] == (margin >= 0 ? 1.0 : -1.0));
        if (ds.y[i] > 0) CHECK(margin >= 0.0);
    }

    // eps == sigma: nearly isotropic.
    Dataset iso = gen_isotropic_margin(dim, u, 1.0, 1.0, LabelKind::Linear, 0.0, 20000, 10);
    SymMatrix cov(dim);
    for (std::size_t r = 0; r < iso.size(); ++r)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j <= i; ++j) cov(i, j) += iso.x(r, i) * iso.x(r, j);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < i; ++j) cov(j, i) = cov(i, j);
    cov *= 1.0 / double(iso.size());
    CHECK(frobenius_corr(cov, SymMatrix::identity(dim)) > 0.98);
}

TEST_CASE("gen_sbh: component structure") {
    const int dim = 10;
    auto u1 = unit(dim, 0), u2 = unit(dim, 1), u3 = unit(dim, 2);
    Dataset ds = gen_sbh(dim, u1, u2, u3, 1.5, 1.0, 2.0, 0.0, 500, 11);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto x = ds.sample(i);
        // Linear coordinate carries eps*y exactly when noise is off.
        CHECK(x[0] == doctest::Approx(1.5 * ds.y[i]).epsilon(1e-12));
        // Radial component has norm r_y exactly.
        double want_r = ds.y[i] > 0 ? 1.0 : 2.0;
        CHECK(proj_norm(x, u2, u3) == doctest::Approx(want_r).epsilon(1e-12));
        // Radial probe classifies perfectly at sigma 0.
        bool inner = proj_norm(x, u2, u3) < 1.5;
        CHECK((inner ? 1.0 : -1.0) == ds.y[i]);
    }
    CHECK_THROWS_AS(gen_sbh(dim, u1, u1, u3, 1.5, 1.0, 2.0, 0.0, 10, 12), Error);
}

TEST_CASE("gen_covariance_gaussian: spectral normalization and labels") {
    SymMatrix cov(3);
    const double b[3][3] = {{1, 1, 0}, {1, 2, 1}, {0, 1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) cov(i, j) = b[i][j];

    Dataset ds = gen_covariance_gaussian(cov, 20000, 13);
    // Spectral norm is 3, so the sampled covariance is cov/3.
    SymMatrix emp(3);
    for (std::size_t r = 0; r < ds.size(); ++r)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j) emp(i, j) += ds.x(r, i) * ds.x(r, j);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < i; ++j) emp(j, i) = emp(i, j);
    emp *= 1.0 / double(ds.size());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(emp(i, j) - cov(i, j) / 3.0) < 0.05);

    int pos = 0;
    for (double y : ds.y) pos += y > 0;
    double frac = double(pos) / ds.size();
    CHECK(std::abs(frac - 0.5) < 3.0 * 0.5 / std::sqrt(double(ds.size())));

    // All samples orthogonal to the null direction up to round-off.
    for (std::size_t i = 0; i < 200; ++i) {
        auto x = ds.sample(i);
        CHECK(std::abs(x[0] - x[1] + x[2]) < 1e-9 * (1.0 + norm2(x)));
    }
}

TEST_CASE("cifar2: format, mapping, downsampling") {
    auto dir = make_fake_cifar();
    Dataset ds = load_cifar2(dir, 100, 16, 77);
    CHECK(ds.size() == 200);
    CHECK(ds.dim() == 16 * 16 * 3);
    CHECK(ds.meta.shape.c == 3);
    for (double v : ds.x.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    int pos = 0;
    for (double y : ds.y) pos += y > 0;
    CHECK(pos == 100);

    Dataset again = load_cifar2(dir, 100, 16, 77);
    CHECK(again.x.data() == ds.x.data());  // seed-deterministic draw

    Dataset full = load_cifar2(dir, 10, 0, 1);
    CHECK(full.dim() == 3072);

    CHECK_THROWS_AS(load_cifar2(dir, 10, 5, 1), ConfigError);   // 5 does not divide 32
    CHECK_THROWS_AS(load_cifar2("/nonexistent_dir_xyz", 10, 16, 1), IoError);

    auto bad = make_fake_cifar(true);
    CHECK_THROWS_AS(load_cifar2(bad, 10, 16, 1), FormatError);
}

TEST_CASE("cifar2: animal mapping uses fixed class indices") {
    // One file with one record per class, label byte = class id.
    auto dir = std::filesystem::temp_directory_path() / "gih_cifar_classes";
    std::filesystem::create_directories(dir);
    for (int f = 1; f <= 5; ++f) {
        std::ofstream out(dir / ("data_batch_" + std::to_string(f) + ".bin"), std::ios::binary);
        for (int r = 0; r < 10000; ++r) {
            unsigned char label = static_cast<unsigned char>(r % 10);
            out.put(static_cast<char>(label));
            // Encode the class id in the first pixel so we can recover it.
            out.put(static_cast<char>(label * 20));
            for (int i = 1; i < 3072; ++i) out.put(static_cast<char>(0));
        }
    }
    Dataset ds = load_cifar2(dir, 500, 0, 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        int cls = int(std::lround(ds.x(i, 0) * 255.0)) / 20;
        bool animal = cls >= 2 && cls <= 7;  // bird..horse
        CHECK(ds.y[i] == (animal ? 1.0 : -1.0));
    }
}

TEST_CASE("dataset persistence round-trip") {
    Dataset ds = gen_circles(6, unit(6, 0), unit(6, 1), 2.0, 1.0, 32, 0.1, 21);
    auto dir = std::filesystem::temp_directory_path() / "gih_ds_roundtrip";
    save_dataset(ds, dir);
    Dataset back = load_dataset(dir);
    CHECK(back.x.data() == ds.x.data());
    CHECK(back.y == ds.y);
    CHECK(back.meta.shape.c == ds.meta.shape.c);
}

TEST_CASE("signal and complement projections are uncorrelated") {
    const int dim = 12;
    auto u1 = unit(dim, 0), u2 = unit(dim, 1);
    Dataset ds = gen_circles(dim, u1, u2, 2.0, 1.0, 20000, 0.5, 23);
    for (int axis = 2; axis < 6; ++axis) {
        double cross1 = 0, cross2 = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            cross1 += ds.x(i, 0) * ds.x(i, axis);
            cross2 += ds.x(i, 1) * ds.x(i, axis);
        }
        // 3-sigma band for the empirical cross-covariance of independent parts.
        double band = 3.0 * 1.6 * 0.5 / std::sqrt(double(ds.size()));
        CHECK(std::abs(cross1 / ds.size()) < band);
        CHECK(std::abs(cross2 / ds.size()) < band);
    }
}
