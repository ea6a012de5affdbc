#include <gtest/gtest.h>

#include <cmath>

#include <topoclust/numerics.hpp>

#include "oracles.hpp"

using namespace topoclust;

TEST(PairwiseSqDistances, ThreeFourFive) {
    const Matrix d = pairwise_sq_distances(Matrix{{0, 0}}, Matrix{{3, 4}});
    ASSERT_EQ(d.rows(), 1u);
    ASSERT_EQ(d.cols(), 1u);
    EXPECT_EQ(d(0, 0), 25.0);
}

TEST(PairwiseSqDistances, SelfDistanceHasZeroDiagonal) {
    Rng rng(3);
    const Matrix a = gaussian_matrix(6, 4, 1.0, rng);
    const Matrix d = pairwise_sq_distances(a, a);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(d(i, i), 0.0);
}

TEST(PairwiseSqDistances, MatchesScalarLoop) {
    Rng rng(11);
    const Matrix a = gaussian_matrix(5, 2, 1.0, rng);
    const Matrix b = gaussian_matrix(3, 2, 1.0, rng);
    const Matrix d = pairwise_sq_distances(a, b);
    const auto ra = oracle::rows_of(a), rb = oracle::rows_of(b);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(d(i, j), oracle::sq_dist(ra[i], rb[j]), 1e-12);
}

TEST(PairwiseSqDistances, SwappingOperandsTransposes) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = gaussian_matrix(1 + rng.below(8), 3, 2.0, rng);
        const Matrix b = gaussian_matrix(1 + rng.below(8), 3, 2.0, rng);
        EXPECT_EQ(pairwise_sq_distances(a, b), pairwise_sq_distances(b, a).transposed());
    }
}

TEST(PairwiseSqDistances, RejectsFeatureMismatch) {
    EXPECT_THROW(pairwise_sq_distances(Matrix(2, 3), Matrix(2, 2)), DimensionError);
}

TEST(FrobeniusNorm, Basics) {
    EXPECT_EQ(frobenius_norm(Matrix(3, 3)), 0.0);
    EXPECT_EQ(frobenius_norm(Matrix{{3, 4}}), 5.0);
}

TEST(FrobeniusNorm, MatchesElementwiseOracleAndTransposeInvariant) {
    Rng rng(8);
    const Matrix m = gaussian_matrix(4, 4, 1.0, rng);
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) s += m(r, c) * m(r, c);
    EXPECT_NEAR(frobenius_norm(m), std::sqrt(s), 1e-12);
    const Matrix w = gaussian_matrix(3, 7, 1.0, rng);
    EXPECT_NEAR(frobenius_norm(w), frobenius_norm(w.transposed()), 1e-12);
}

TEST(FiniteDifference, LinearFunctionGivesOnes) {
    Rng rng(1);
    const Matrix m = gaussian_matrix(3, 2, 1.0, rng);
    const Matrix g = finite_difference_gradient(
        [](const Matrix& x) {
            double s = 0.0;
            for (double v : x.values()) s += v;
            return s;
        },
        m, 1e-5);
    for (double v : g.values()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(FiniteDifference, HalfSquaredNormGivesIdentityMap) {
    Rng rng(2);
    const Matrix m = gaussian_matrix(4, 3, 1.0, rng);
    const Matrix g = finite_difference_gradient(
        [](const Matrix& x) { return 0.5 * frobenius_norm(x) * frobenius_norm(x); }, m, 1e-5);
    EXPECT_LT(max_abs_diff(g, m), 1e-8);
}

TEST(FiniteDifference, NonFiniteValueNamesEntry) {
    const Matrix m{{1.0, 1e-4}};
    try {
        // only the backward step on entry (0, 1) leaves the log's domain
        finite_difference_gradient([](const Matrix& x) { return std::log(x(0, 1)); }, m, 1e-3);
        FAIL() << "expected std::domain_error";
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("(0, 1)"), std::string::npos) << e.what();
    }
}

TEST(FiniteDifference, RejectsNonPositiveStep) {
    EXPECT_THROW(finite_difference_gradient([](const Matrix&) { return 0.0; }, Matrix(1, 1), 0.0),
                 std::invalid_argument);
}

TEST(Orthonormalize, RandomGaussianColumns) {
    Rng rng(42);
    const Matrix q = orthonormalize_columns(gaussian_matrix(10, 3, 1.0, rng), rng);
    EXPECT_LT(max_abs_diff(matmul_tn(q, q), Matrix::identity(3)), 1e-10);
}

TEST(Orthonormalize, IdentityStaysIdentity) {
    Rng rng(0);
    EXPECT_LT(max_abs_diff(orthonormalize_columns(Matrix::identity(5), rng), Matrix::identity(5)), 1e-15);
}

TEST(Orthonormalize, AlreadyOrthonormalInputIsReturned) {
    Rng rng(9);
    const Matrix q = orthonormalize_columns(gaussian_matrix(8, 4, 1.0, rng), rng);
    EXPECT_LT(max_abs_diff(orthonormalize_columns(q, rng), q), 1e-12);
}

TEST(Orthonormalize, PreservesColumnSpan) {
    Rng rng(17);
    const Matrix m = gaussian_matrix(9, 3, 1.0, rng);
    const Matrix q = orthonormalize_columns(m, rng);
    // projecting m onto span(q) must reproduce m
    const Matrix proj = matmul(q, matmul_tn(q, m));
    EXPECT_LT(max_abs_diff(proj, m), 1e-10);
}

TEST(Orthonormalize, SignConventionFirstNonzeroPositive) {
    Rng rng(4);
    const Matrix q = orthonormalize_columns(gaussian_matrix(6, 3, 1.0, rng) * -1.0, rng);
    for (std::size_t j = 0; j < 3; ++j) {
        std::size_t i = 0;
        while (std::abs(q(i, j)) <= 1e-14) ++i;
        EXPECT_GT(q(i, j), 0.0);
    }
}

TEST(Orthonormalize, RankDeficientInputIsRepaired) {
    Matrix m(6, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        m(i, 0) = static_cast<double>(i + 1);
        m(i, 1) = 2.0 * static_cast<double>(i + 1);  // dependent column
        m(i, 2) = (i % 2) ? 1.0 : -1.0;
    }
    Rng rng(1);
    const Matrix q = orthonormalize_columns(m, rng);
    EXPECT_LT(max_abs_diff(matmul_tn(q, q), Matrix::identity(3)), 1e-10);
}

TEST(Orthonormalize, PropertyUnitColumnsAndSmallDots) {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + rng.below(6);
        const std::size_t n = d + rng.below(20);
        const Matrix q = orthonormalize_columns(gaussian_matrix(n, d, 3.0, rng), rng);
        const Matrix gram = matmul_tn(q, q);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) EXPECT_NEAR(gram(a, b), a == b ? 1.0 : 0.0, 1e-10);
    }
}

TEST(Orthonormalize, RejectsMoreColumnsThanRows) {
    Rng rng(0);
    EXPECT_THROW(orthonormalize_columns(Matrix(2, 3), rng), DimensionError);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(77), b(77);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.next_u64(), b.next_u64());
        EXPECT_EQ(a.normal(), b.normal());
    }
}

TEST(Rng, KnownEngineOutput) {
    // std::mt19937_64 default-seed value mandated by the standard (10000th draw).
    std::mt19937_64 ref;
    ref.discard(9999);
    EXPECT_EQ(ref(), 9981545732273789042ULL);
    Rng r(5489);
    EXPECT_EQ(r.next_u64(), std::mt19937_64(5489)());
}

TEST(Rng, UniformAndNormalMoments) {
    Rng rng(123);
    double su = 0, sn = 0, sn2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.01);
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
    Rng rng(6);
    auto s = rng.sample_without_replacement(50, 50);
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i], i);
    EXPECT_THROW(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

TEST(Matrix, MatmulVariantsAgree) {
    Rng rng(31);
    const Matrix a = gaussian_matrix(4, 3, 1.0, rng);
    const Matrix b = gaussian_matrix(3, 5, 1.0, rng);
    const Matrix ab = matmul(a, b);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < 3; ++c) s += a(i, c) * b(c, j);
            EXPECT_NEAR(ab(i, j), s, 1e-12);
        }
    EXPECT_LT(max_abs_diff(matmul_tn(a.transposed(), b), ab), 1e-12);
    EXPECT_LT(max_abs_diff(matmul_nt(a, b.transposed()), ab), 1e-12);
    EXPECT_THROW(matmul(a, a), DimensionError);
}
