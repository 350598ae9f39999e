#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gih/linalg.hpp"
#include "gih/oracles.hpp"

using namespace gih;
using namespace gih::oracle;

TEST_CASE("conv index maps: receptive counts and overlap structure") {
    auto maps = ConvIndexMaps::make_1d(3, 2, 1);
    REQUIRE(maps.n_patches() == 2);
    auto counts = maps.receptive_counts();
    CHECK(counts == std::vector<int>{1, 2, 1});

    // Same-patch overlap is diagonal binary; cross-patch overlap is a shifted
    // binary partial permutation (at most one 1 per row and column).
    for (std::size_t j1 = 0; j1 < 2; ++j1)
        for (std::size_t j2 = 0; j2 < 2; ++j2) {
            Matrix o = maps.overlap(j1, j2);
            std::vector<int> row_ones(3, 0), col_ones(3, 0);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    CHECK((o(a, b) == 0.0 || o(a, b) == 1.0));
                    if (o(a, b) == 1.0) {
                        ++row_ones[a];
                        ++col_ones[b];
                        if (j1 == j2) CHECK(a == b);
                    }
                }
            for (int a = 0; a < 3; ++a) {
                CHECK(row_ones[a] <= 1);
                CHECK(col_ones[a] <= 1);
            }
        }

    CHECK_THROWS_AS(ConvIndexMaps::make_1d(3, 5, 1), ShapeError);
}

TEST_CASE("oracle_mlp_identity") {
    SymMatrix g = oracle_mlp_identity(2, 1.0, 1.0, 3);
    CHECK(frobenius_corr(g, SymMatrix::identity(3)) == doctest::Approx(1.0));
    CHECK(g(0, 0) == doctest::Approx(1.0));

    SymMatrix zero = oracle_mlp_identity(0, 1.0, 1.0, 3);
    CHECK(zero.frobenius_norm() == 0.0);

    SymMatrix scaled = oracle_mlp_identity(8, 0.5, 2.0, 4);
    CHECK(scaled(0, 0) == doctest::Approx(4.0 * 8 * 0.25 / 2.0));
}

TEST_CASE("oracle_convpool_G: worked example structure") {
    // The ordered-pair sum for D=3, kernel 2 is exactly the bracket matrix.
    SymMatrix g = oracle_convpool_G_1d(3, 2, 1, 1, 1.0, 1.0);
    const double b[3][3] = {{1, 1, 0}, {1, 2, 1}, {0, 1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(g(i, j) == doctest::Approx(0.25 * b[i][j]));
}

TEST_CASE("oracle_convpool_G: single full-size patch reduces to the identity structure") {
    // kernel == input: one patch, overlap(0,0) = I_D, so G = n*s_w^2*s_p^2*I.
    SymMatrix g = oracle_convpool_G_1d(3, 3, 1, 2, 1.0, 1.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(g(i, j) == doctest::Approx(i == j ? 2.0 : 0.0));
}

TEST_CASE("lemma: normalized gaussian second moment") {
    auto oracle = oracle_lemma_normalized_gaussian(8, 2000, 1);
    for (int i = 0; i < 8; ++i) {
        CHECK(oracle.analytic(i, i) == doctest::Approx(0.125));
        for (int j = 0; j < i; ++j) CHECK(oracle.analytic(i, j) == 0.0);
    }
    CHECK(std::abs(oracle.mc.trace() - 1.0) < 1e-12);

    auto big = oracle_lemma_normalized_gaussian(2, 1000000, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(big.mc(i, j) - big.analytic(i, j)) < 5e-3);
}

TEST_CASE("oracle_linear_regression_delta") {
    SymMatrix s = SymMatrix::identity(3);
    SymMatrix d = oracle_linear_regression_delta(s, 1.0);
    CHECK(d(0, 0) == doctest::Approx(-2.0));
    CHECK(oracle_linear_regression_delta(s, 0.0).frobenius_norm() == 0.0);
    SymMatrix d2 = oracle_linear_regression_delta(s, 3.0);
    CHECK(d2(1, 1) == doctest::Approx(-18.0));
}

TEST_CASE("verify_corollary_bounds: isotropic patches give a tight sandwich") {
    auto maps = ConvIndexMaps::make_1d(4, 2, 1);
    std::vector<SymMatrix> covs(maps.n_patches(), SymMatrix::identity(2) * 2.0);
    auto bounds = verify_corollary_bounds(maps, covs, 30000, 5);
    CHECK(bounds.sandwich_ok);
    // lower == upper == (1/lambda) on the overlap support.
    CHECK((bounds.upper - bounds.lower).frobenius_norm() == doctest::Approx(0.0));
    CHECK(bounds.upper(0, 0) == doctest::Approx(0.5));
    double rel = (bounds.mc - bounds.upper).frobenius_norm() / bounds.upper.frobenius_norm();
    CHECK(rel < 0.05);
}

TEST_CASE("verify_corollary_bounds: anisotropic diag(4,1) bounds") {
    auto maps = ConvIndexMaps::make_1d(4, 2, 1);
    std::vector<SymMatrix> covs(maps.n_patches(), SymMatrix::diag({4.0, 1.0}));
    auto bounds = verify_corollary_bounds(maps, covs, 30000, 6);
    CHECK(bounds.sandwich_ok);
    // Per-pair constants: lower 1/4, upper 1 on the overlap diagonal support.
    CHECK(bounds.lower(0, 0) == doctest::Approx(0.25));
    CHECK(bounds.upper(0, 0) == doctest::Approx(1.0));

    std::vector<SymMatrix> bad(maps.n_patches(), SymMatrix::diag({1.0, -0.5}));
    CHECK_THROWS_AS(verify_corollary_bounds(maps, bad, 100, 7), NotPositiveDefiniteError);
}

TEST_CASE("oracle_appendix_example") {
    auto ex = oracle_appendix_example(std::sqrt(2.0));  // variance 2
    CHECK(ex.g(0, 0) == doctest::Approx(1.0));
    CHECK(ex.g(1, 1) == doctest::Approx(2.0));
    CHECK(ex.values[0] == doctest::Approx(3.0));
    CHECK(ex.values[1] == doctest::Approx(1.0));
    CHECK(ex.values[2] == doctest::Approx(0.0));

    EigenDecomposition eig = sym_eig(ex.g);
    for (int k = 0; k < 3; ++k) {
        CHECK(eig.values[k] == doctest::Approx(ex.values[k]).epsilon(1e-9));
        double align = 0;
        for (int i = 0; i < 3; ++i) align += eig.vectors(i, k) * ex.vectors(i, k);
        CHECK(std::abs(align) == doctest::Approx(1.0).epsilon(1e-9));
    }

    auto doubled = oracle_appendix_example(2.0);  // variance 4: doubled matrix
    CHECK(doubled.g(1, 1) == doctest::Approx(4.0));
    CHECK(doubled.values[0] == doctest::Approx(6.0));
    for (int i = 0; i < 3; ++i)
        CHECK(doubled.vectors(i, 0) == doctest::Approx(ex.vectors(i, 0)));
}
