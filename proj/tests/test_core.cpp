#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "gih/linalg.hpp"
#include "gih/matrix.hpp"
#include "gih/rng.hpp"
#include "gih/sampling.hpp"
#include "gih/serialize.hpp"

using namespace gih;

namespace {

SymMatrix a7_matrix() {
    SymMatrix g(3);
    const double b[3][3] = {{1, 1, 0}, {1, 2, 1}, {0, 1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(i, j) = b[i][j];
    return g;
}

double reconstruction_error(const SymMatrix& a, const EigenDecomposition& eig) {
    std::size_t n = a.dim();
    Matrix rec(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                rec(i, j) += eig.values[k] * eig.vectors(i, k) * eig.vectors(j, k);
    return (rec - a.to_matrix()).frobenius_norm() / std::max(1.0, a.to_matrix().frobenius_norm());
}

// |cos| between an eigenvector column and a reference direction.
double alignment(const Matrix& vectors, int col, std::vector<double> ref) {
    double n = norm2(ref);
    for (double& v : ref) v /= n;
    double s = 0;
    for (std::size_t i = 0; i < vectors.rows(); ++i) s += vectors(i, col) * ref[i];
    return std::abs(s);
}

}  // namespace

TEST_CASE("rng: identical seed and stream replay the same sequence") {
    SeededRng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    SeededRng c(42, 8);
    int same = 0;
    SeededRng a2(42, 7);
    for (int i = 0; i < 100; ++i)
        if (a2.next_u64() == c.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("rng: derive gives distinct reproducible streams") {
    SeededRng root(1);
    SeededRng a = root.derive(0), b = root.derive(1), a2 = root.derive(0);
    CHECK(a.next_u64() == a2.next_u64());
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("rng: gaussian moments") {
    SeededRng rng(3);
    const int n = 200000;
    double s = 0, s2 = 0, s3 = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.next_gaussian();
        s += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s3 / n) < 0.05);
}

TEST_CASE("sym_eig: worked 3-d example") {
    EigenDecomposition eig = sym_eig(a7_matrix());
    CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.values[2] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(alignment(eig.vectors, 0, {1, 2, 1}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(alignment(eig.vectors, 1, {-1, 0, 1}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(alignment(eig.vectors, 2, {1, -1, 1}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sym_eig: identity and diagonal") {
    EigenDecomposition id3 = sym_eig(SymMatrix::identity(3));
    for (double v : id3.values) CHECK(v == doctest::Approx(1.0));

    EigenDecomposition d = sym_eig(SymMatrix::diag({5.0, 2.0}));
    CHECK(d.values[0] == doctest::Approx(5.0));
    CHECK(d.values[1] == doctest::Approx(2.0));
    CHECK(d.vectors(0, 0) == doctest::Approx(1.0));
    CHECK(d.vectors(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig: rejects non-finite input") {
    SymMatrix bad(2);
    bad.set_sym(0, 1, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(sym_eig(bad), Error);
}

TEST_CASE("sym_eig: reconstruction and orthonormality over random matrices") {
    SeededRng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t dim = 1 + rng.next_below(trial < 90 ? 64 : 256);
        SymMatrix a(dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                a.set_sym(i, j, 2.0 * rng.next_double() - 1.0);
        EigenDecomposition eig = sym_eig(a);
        CHECK(reconstruction_error(a, eig) <= 1e-8);
        for (std::size_t i = 1; i < dim; ++i) CHECK(eig.values[i - 1] >= eig.values[i]);
        for (std::size_t c1 = 0; c1 < dim; ++c1)
            for (std::size_t c2 = c1; c2 < dim; ++c2) {
                double d = 0;
                for (std::size_t r = 0; r < dim; ++r) d += eig.vectors(r, c1) * eig.vectors(r, c2);
                CHECK(std::abs(d - (c1 == c2 ? 1.0 : 0.0)) <= 1e-9);
            }
    }
}

TEST_CASE("cholesky: examples") {
    Matrix id = cholesky(SymMatrix::identity(2));
    CHECK(id(0, 0) == doctest::Approx(1.0));
    CHECK(id(1, 1) == doctest::Approx(1.0));
    CHECK(id(1, 0) == doctest::Approx(0.0));

    SymMatrix a(2);
    a(0, 0) = 4;
    a.set_sym(0, 1, 2);
    a(1, 1) = 5;
    Matrix l = cholesky(a);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(1, 1) == doctest::Approx(2.0));
    CHECK(l(0, 1) == 0.0);

    SymMatrix bad(2);
    bad(0, 0) = 1;
    bad.set_sym(0, 1, 2);
    bad(1, 1) = 1;
    CHECK_THROWS_AS(cholesky(bad), NotPositiveDefiniteError);
}

TEST_CASE("cholesky: round-trip on random SPD matrices") {
    SeededRng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t dim = 1 + rng.next_below(24);
        Matrix b(dim, dim);
        for (auto& v : b.data()) v = rng.next_gaussian();
        Matrix bt_b = matmul(b.transposed(), b);
        for (std::size_t i = 0; i < dim; ++i) bt_b(i, i) += 1.0;
        SymMatrix a = SymMatrix::from_matrix(bt_b);
        Matrix l = cholesky(a);
        double err = (matmul(l, l.transposed()) - a.to_matrix()).frobenius_norm() /
                     a.to_matrix().frobenius_norm();
        CHECK(err <= 1e-10);
        for (std::size_t i = 0; i < dim; ++i) CHECK(l(i, i) > 0.0);
    }
}

TEST_CASE("gram_schmidt: examples") {
    auto basis = gram_schmidt({{1, 0}, {0, 1}}, 1e-10);
    REQUIRE(basis.size() == 2);
    CHECK(basis[0][0] == doctest::Approx(1.0));
    CHECK(basis[1][1] == doctest::Approx(1.0));

    basis = gram_schmidt({{1, 0}, {1, 1}}, 1e-10);
    REQUIRE(basis.size() == 2);
    CHECK(basis[1][0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(basis[1][1] == doctest::Approx(1.0));

    basis = gram_schmidt({{1, 0}, {2, 0}}, 1e-8);
    REQUIRE(basis.size() == 1);
    CHECK(basis[0][0] == doctest::Approx(1.0));

    CHECK(gram_schmidt({}, 1e-8).empty());
}

TEST_CASE("gram_schmidt: output spans the input") {
    SeededRng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t dim = 2 + rng.next_below(16);
        std::size_t count = 1 + rng.next_below(dim);
        std::vector<std::vector<double>> vectors;
        for (std::size_t i = 0; i < count; ++i) vectors.push_back(gaussian_vector(rng, dim));
        auto basis = gram_schmidt(vectors, 1e-10);
        for (const auto& v : vectors) {
            std::vector<double> res = v;
            for (const auto& b : basis) {
                double c = dot(res, b);
                for (std::size_t i = 0; i < dim; ++i) res[i] -= c * b[i];
            }
            CHECK(norm2(res) <= 1e-9 * std::max(1.0, norm2(v)));
        }
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = i + 1; j < basis.size(); ++j)
                CHECK(std::abs(dot(basis[i], basis[j])) <= 1e-10);
    }
}

TEST_CASE("frobenius_corr: examples and errors") {
    Matrix a(2, 2);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = -1;
    a(1, 1) = 3;
    CHECK(frobenius_corr(a, a) == doctest::Approx(1.0));

    Matrix id = Matrix::identity(2), swap(2, 2);
    swap(0, 1) = 1;
    swap(1, 0) = 1;
    CHECK(frobenius_corr(id, swap) == doctest::Approx(0.0));

    Matrix wrong(3, 2);
    CHECK_THROWS_AS(frobenius_corr(a, wrong), ShapeError);
    Matrix zero(2, 2);
    CHECK_THROWS_AS(frobenius_corr(a, zero), UndefinedCorrelationError);
}

TEST_CASE("frobenius_corr: symmetry, scaling, bounds") {
    SeededRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + rng.next_below(8);
        Matrix a(n, n), b(n, n);
        for (auto& v : a.data()) v = rng.next_gaussian();
        for (auto& v : b.data()) v = rng.next_gaussian();
        double c = frobenius_corr(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(frobenius_corr(b, a) == doctest::Approx(c));
        CHECK(frobenius_corr(a * 2.5, b) == doctest::Approx(c));
        CHECK(frobenius_corr(a * -1.0, b) == doctest::Approx(-c));
    }
}

TEST_CASE("frobenius_corr: random high-dimensional vectors are nearly orthogonal") {
    SeededRng rng(13);
    const int dim = 3072;
    double sum_abs = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Matrix a(dim, 1), b(dim, 1);
        for (auto& v : a.data()) v = rng.next_gaussian();
        for (auto& v : b.data()) v = rng.next_gaussian();
        sum_abs += std::abs(frobenius_corr(a, b));
    }
    double mean = sum_abs / 1000.0;
    CHECK(mean > 0.005);
    CHECK(mean < 0.03);
}

TEST_CASE("gaussian_sample: empirical covariance approaches the target") {
    const std::size_t n = 100000;
    Matrix draws = gaussian_sample(SeededRng(21), SymMatrix::identity(4), n);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0;
            for (std::size_t r = 0; r < n; ++r) s += draws(r, i) * draws(r, j);
            CHECK(std::abs(s / n - (i == j ? 1.0 : 0.0)) < 0.05);
        }

    SymMatrix target = a7_matrix();  // PSD with a zero eigenvalue: exercises the eig path
    Matrix d2 = gaussian_sample(SeededRng(22), target, n);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0;
            for (std::size_t r = 0; r < n; ++r) s += d2(r, i) * d2(r, j);
            CHECK(std::abs(s / n - target(i, j)) < 0.05);
        }
}

TEST_CASE("gaussian_sample: small isotropic std") {
    const std::size_t n = 100000;
    Matrix draws = gaussian_sample(SeededRng(23), 1e-4, 3, n);
    for (int j = 0; j < 3; ++j) {
        double s2 = 0;
        for (std::size_t r = 0; r < n; ++r) s2 += draws(r, j) * draws(r, j);
        double std_j = std::sqrt(s2 / n);
        CHECK(std::abs(std_j - 1e-4) < 0.05e-4);
    }
}

TEST_CASE("gaussian_sample: rejects indefinite covariance and is deterministic") {
    SymMatrix indef(2);
    indef(0, 0) = 1;
    indef.set_sym(0, 1, 2);
    indef(1, 1) = 1;  // eigenvalue -1
    CHECK_THROWS_AS(gaussian_sample(SeededRng(1), indef, 4), NotPsdError);

    Matrix a = gaussian_sample(SeededRng(5, 3), SymMatrix::identity(3), 16);
    Matrix b = gaussian_sample(SeededRng(5, 3), SymMatrix::identity(3), 16);
    CHECK(a.data() == b.data());
}

TEST_CASE("matrix serialization round-trips") {
    SeededRng rng(31);
    Matrix m(7, 5);
    for (auto& v : m.data()) v = rng.next_gaussian() * std::pow(10.0, double(rng.next_below(6)) - 3.0);

    auto tmp = std::filesystem::temp_directory_path() / "gih_test_io";
    std::filesystem::create_directories(tmp);

    save_matrix_csv(m, tmp / "m.csv");
    Matrix back = load_matrix_csv(tmp / "m.csv");
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    CHECK(back.data() == m.data());  // %.17g round-trips doubles exactly

    save_matrix_bin(m, tmp / "m.bin");
    Matrix back2 = load_matrix_bin(tmp / "m.bin");
    CHECK(back2.data() == m.data());

    std::ofstream trunc(tmp / "bad.bin", std::ios::binary);
    trunc << "short";
    trunc.close();
    CHECK_THROWS_AS(load_matrix_bin(tmp / "bad.bin"), FormatError);
}

TEST_CASE("symmatrix: symmetry tolerance enforced") {
    Matrix m(2, 2);
    m(0, 0) = 1;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0 + 1e-6;
    m(1, 1) = 1;
    CHECK_THROWS_AS(SymMatrix::from_matrix(m), Error);
    m(1, 0) = 1.0 + 1e-14;
    SymMatrix s = SymMatrix::from_matrix(m);
    CHECK(s(0, 1) == s(1, 0));
}
