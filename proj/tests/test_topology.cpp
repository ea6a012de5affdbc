#include <gtest/gtest.h>

#include <cmath>

#include <topoclust/numerics.hpp>
#include <topoclust/topology.hpp>

#include "oracles.hpp"

using namespace topoclust;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_set(const EdgeMask& m) {
    const auto e = m.edges();
    return {e.begin(), e.end()};
}

}  // namespace

TEST(ChlEdges, TwoNearestOnly) {
    const EdgeMask m = chl_edges(Matrix{{0, 0}}, Matrix{{0, 1}, {0, 2}, {5, 5}});
    EXPECT_EQ(m.edges(), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

TEST(ChlEdges, TwoPrototypesAlwaysJoined) {
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
        const EdgeMask m = chl_edges(gaussian_matrix(1 + rng.below(10), 3, 1.0, rng), gaussian_matrix(2, 3, 1.0, rng));
        EXPECT_EQ(m.edge_count(), 1u);
        EXPECT_TRUE(m.connected(0, 1));
    }
}

TEST(ChlEdges, MatchesExhaustiveOracle) {
    Rng rng(2);
    const Matrix X = gaussian_matrix(20, 2, 1.0, rng);
    const Matrix P = gaussian_matrix(5, 2, 1.0, rng);
    EXPECT_EQ(edge_set(chl_edges(X, P)), oracle::chl_edges(oracle::rows_of(X), oracle::rows_of(P)));
}

TEST(ChlEdges, DuplicatedPrototypesBreakTiesByIndex) {
    // prototypes 1 and 3 coincide, so a sample near them ties for the runner-up
    const Matrix P{{0, 0}, {1, 0}, {9, 9}, {1, 0}};
    const EdgeMask m = chl_edges(Matrix{{1, 0}}, P);
    EXPECT_EQ(m.edges(), (std::vector<std::pair<std::size_t, std::size_t>>{{1, 3}}));
    const EdgeMask m2 = chl_edges(Matrix{{0.5, 0}}, P);  // three-way tie at distance 0.25
    EXPECT_EQ(m2.edges(), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

TEST(ChlEdges, RejectsSinglePrototype) { EXPECT_THROW(chl_edges(Matrix{{0, 0}}, Matrix{{1, 1}}), std::invalid_argument); }

TEST(ChlEdges, PropertyPrototypePermutationRelabelsEdges) {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        const std::size_t k = 2 + rng.below(6);
        const Matrix X = gaussian_matrix(1 + rng.below(25), 2, 1.0, rng);
        const Matrix P = gaussian_matrix(k, 2, 1.0, rng);
        const auto perm = rng.sample_without_replacement(k, k);  // new row r holds old prototype perm[r]
        Matrix Q(k, 2);
        for (std::size_t r = 0; r < k; ++r) std::ranges::copy(P.row(perm[r]), Q.row(r).begin());
        const EdgeMask a = chl_edges(X, P), b = chl_edges(X, Q);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(b.connected(i, j), a.connected(perm[i], perm[j]));
    }
}

TEST(EdgeMatrix, ThreeFourFive) {
    EdgeMask mask(2);
    mask.connect(0, 1);
    const Matrix E = edge_matrix(Matrix{{0, 0}, {3, 4}}, mask);
    EXPECT_EQ(E(0, 1), 5.0);
    EXPECT_EQ(E(1, 0), 5.0);
    EXPECT_EQ(E(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(E), std::sqrt(50.0));
}

TEST(EdgeMatrix, EmptyMaskGivesZeros) {
    const Matrix E = edge_matrix(Matrix{{0, 0}, {3, 4}, {1, 1}}, EdgeMask(3));
    EXPECT_EQ(E, Matrix(3, 3));
}

TEST(EdgeMatrix, RandomInstanceSymmetricAndMasked) {
    Rng rng(4);
    const Matrix P = gaussian_matrix(7, 3, 1.0, rng);
    EdgeMask mask(7);
    for (int e = 0; e < 10; ++e) mask.connect(rng.below(7), rng.below(7));
    const Matrix E = edge_matrix(P, mask);
    const auto rows = oracle::rows_of(P);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            EXPECT_EQ(E(i, j), E(j, i));
            const double want = mask.connected(i, j) ? std::sqrt(oracle::sq_dist(rows[i], rows[j])) : 0.0;
            EXPECT_NEAR(E(i, j), want, 1e-12);
        }
}

TEST(VoronoiAssign, Basics) {
    const Matrix P{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    EXPECT_EQ(voronoi_assign(Matrix{{3, 0}}, P), std::vector<std::size_t>{3});
    EXPECT_EQ(voronoi_assign(Matrix{{0.5, 0}}, P), std::vector<std::size_t>{0});
}

TEST(VoronoiAssign, MatchesScalarOracle) {
    Rng rng(5);
    const Matrix X = gaussian_matrix(50, 2, 1.0, rng);
    const Matrix P = gaussian_matrix(7, 2, 1.0, rng);
    const auto a = voronoi_assign(X, P);
    const auto xs = oracle::rows_of(X), ps = oracle::rows_of(P);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a[i], oracle::ranked(xs[i], ps)[0]);
}

TEST(QuantizationError, Basics) {
    EXPECT_DOUBLE_EQ(quantization_error(Matrix{{0, 0}, {2, 0}}, Matrix{{1, 0}}), 1.0);
    EXPECT_EQ(quantization_error(Matrix{{0, 0}, {2, 0}}, Matrix{{2, 0}, {0, 0}, {7, 7}}), 0.0);
}

TEST(QuantizationError, MatchesBruteForce) {
    Rng rng(6);
    const Matrix X = gaussian_matrix(40, 3, 1.0, rng);
    const Matrix P = gaussian_matrix(6, 3, 1.0, rng);
    EXPECT_NEAR(quantization_error(X, P), oracle::quantization_error(oracle::rows_of(X), oracle::rows_of(P)), 1e-12);
}

TEST(Loss, LambdaZeroIsQuantizationError) {
    Rng rng(7);
    const Matrix X = gaussian_matrix(30, 2, 1.0, rng);
    const Matrix P = gaussian_matrix(5, 2, 1.0, rng);
    EXPECT_EQ(loss(X, P, chl_edges(X, P), 0.0), quantization_error(X, P));
}

TEST(Loss, ComposesAuditedTerms) {
    const Matrix X{{0, 0}, {2, 0}};
    const Matrix P{{0, 0}, {3, 4}};
    EdgeMask mask(2);
    mask.connect(0, 1);
    EXPECT_DOUBLE_EQ(loss(X, P, mask, 0.01), 2.0 + 0.01 * std::sqrt(50.0));
    EXPECT_THROW(loss(X, P, mask, -1.0), std::invalid_argument);
}

TEST(LossGradient, ZeroAtCentroids) {
    const Matrix X{{0, 0}, {2, 0}, {10, 10}, {10, 12}};
    const Matrix P{{1, 0}, {10, 11}};
    EXPECT_LT(max_abs_diff(loss_gradient(X, P, chl_edges(X, P), 0.0), Matrix(2, 2)), 1e-15);
}

TEST(LossGradient, EmptyCellRowIsZero) {
    const Matrix X{{0, 0}, {1, 0}};
    const Matrix P{{0.5, 0}, {100, 100}, {0.4, 0.1}};
    const Matrix G = loss_gradient(X, P, EdgeMask(3), 0.0);
    EXPECT_EQ(G(1, 0), 0.0);
    EXPECT_EQ(G(1, 1), 0.0);
}

TEST(LossGradient, MatchesFiniteDifferences) {
    Rng rng(8);
    for (double lambda : {0.0, 0.01, 0.5}) {
        const Matrix X = gaussian_matrix(40, 3, 1.0, rng);
        const Matrix P = gaussian_matrix(5, 3, 1.0, rng);
        const FrozenStructure s = FrozenStructure::from(X, P);
        const Matrix fd =
            finite_difference_gradient([&](const Matrix& Q) { return frozen_loss(X, Q, s, lambda); }, P, 1e-5);
        EXPECT_LT(oracle::max_relative_error(loss_gradient(P, s, lambda), fd), 1e-5) << "lambda " << lambda;
    }
}

TEST(LossGradient, ZeroEdgeNormDropsEdgeTerm) {
    // two coincident connected prototypes: ||E|| = 0
    const Matrix X{{0, 0}, {1, 0}};
    const Matrix P{{0.5, 0}, {0.5, 0}};
    EdgeMask mask(2);
    mask.connect(0, 1);
    const Matrix G = loss_gradient(X, P, mask, 1.0);
    EXPECT_TRUE(G.all_finite());
    EXPECT_EQ(G, loss_gradient(X, P, mask, 0.0));
}

TEST(FrozenStructure, CountsAndSumsMatchAssignment) {
    Rng rng(9);
    const Matrix X = gaussian_matrix(25, 2, 1.0, rng);
    const Matrix P = gaussian_matrix(4, 2, 1.0, rng);
    const FrozenStructure s = FrozenStructure::from(X, P);
    EXPECT_EQ(s.assignment, voronoi_assign(X, P));
    EXPECT_EQ(s.mask, chl_edges(X, P));
    std::size_t total = 0;
    for (std::size_t c : s.counts) total += c;
    EXPECT_EQ(total, 25u);
    EXPECT_NEAR(frozen_loss(X, P, s, 0.3), loss(X, P, s.mask, 0.3), 1e-12);
}

TEST(EdgeMask, SymmetricAndIgnoresSelfLoops) {
    EdgeMask m(4);
    m.connect(2, 1);
    m.connect(3, 3);
    EXPECT_TRUE(m.connected(1, 2));
    EXPECT_FALSE(m.connected(3, 3));
    EXPECT_EQ(m.degree(1), 1u);
    EXPECT_EQ(m.edge_count(), 1u);
    EXPECT_THROW(m.connect(0, 4), std::out_of_range);
}
