#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"
#include "numerics.hpp"

namespace topoclust {

/// Symmetric 0/1 adjacency between prototypes with an empty diagonal.
class EdgeMask {
public:
    EdgeMask() = default;
    explicit EdgeMask(std::size_t k) : k_(k), adj_(k * k, 0) {}

    std::size_t k() const noexcept { return k_; }

    bool connected(std::size_t i, std::size_t j) const noexcept { return adj_[i * k_ + j] != 0; }

    void connect(std::size_t i, std::size_t j) {
        if (i >= k_ || j >= k_) throw std::out_of_range("EdgeMask::connect: index out of range");
        if (i == j) return;
        adj_[i * k_ + j] = 1;
        adj_[j * k_ + i] = 1;
    }

    std::size_t degree(std::size_t i) const noexcept {
        std::size_t deg = 0;
        for (std::size_t j = 0; j < k_; ++j) deg += adj_[i * k_ + j];
        return deg;
    }

    /// Undirected edges (i < j) in row-major order.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < k_; ++i)
            for (std::size_t j = i + 1; j < k_; ++j)
                if (connected(i, j)) out.emplace_back(i, j);
        return out;
    }

    std::size_t edge_count() const noexcept {
        std::size_t c = 0;
        for (std::size_t i = 0; i < k_; ++i)
            for (std::size_t j = i + 1; j < k_; ++j) c += adj_[i * k_ + j];
        return c;
    }

    friend bool operator==(const EdgeMask&, const EdgeMask&) = default;

private:
    std::size_t k_ = 0;
    std::vector<std::uint8_t> adj_;
};

struct PrototypeSet {
    Matrix P;
    EdgeMask mask;
};

/// First and second winner of every sample plus the squared distance to the first.
struct Winners {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;  // only meaningful when k >= 2
    std::vector<double> first_sq_distance;
};

/// Strict less-than scan, so ties resolve to the lowest prototype index.
inline Winners find_winners(const Matrix& X, const Matrix& P) {
    if (X.cols() != P.cols()) throw DimensionError("find_winners: samples " + X.shape() + " vs prototypes " + P.shape());
    if (P.rows() == 0) throw std::invalid_argument("find_winners: no prototypes");
    const std::size_t n = X.rows(), k = P.rows(), d = X.cols();
    Winners w{std::vector<std::size_t>(n), std::vector<std::size_t>(n), std::vector<double>(n)};
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = X.row(i).data();
        double best = inf, second = inf;
        std::size_t bi = 0, si = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double* p = P.row(j).data();
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double t = x[c] - p[c];
                s += t * t;
            }
            if (s < best) {
                second = best;
                si = bi;
                best = s;
                bi = j;
            } else if (s < second) {
                second = s;
                si = j;
            }
        }
        if (k == 1) si = bi;
        w.first[i] = bi;
        w.second[i] = si;
        w.first_sq_distance[i] = best;
    }
    return w;
}

inline EdgeMask chl_edges_from(const Winners& w, std::size_t k) {
    EdgeMask mask(k);
    for (std::size_t i = 0; i < w.first.size(); ++i) mask.connect(w.first[i], w.second[i]);
    return mask;
}

/// Competitive Hebbian rule: each sample links its first and second nearest prototypes.
inline EdgeMask chl_edges(const Matrix& X, const Matrix& P) {
    if (P.rows() < 2) throw std::invalid_argument("chl_edges: need at least 2 prototypes");
    return chl_edges_from(find_winners(X, P), P.rows());
}

/// E(i, j) = ||p_i - p_j|| on connected pairs, 0 elsewhere.
inline Matrix edge_matrix(const Matrix& P, const EdgeMask& mask) {
    if (mask.k() != P.rows())
        throw DimensionError("edge_matrix: mask over " + std::to_string(mask.k()) + " prototypes, P is " + P.shape());
    const std::size_t k = P.rows();
    Matrix E(k, k);
    for (auto [i, j] : mask.edges()) {
        double s = 0.0;
        for (std::size_t c = 0; c < P.cols(); ++c) {
            const double t = P(i, c) - P(j, c);
            s += t * t;
        }
        E(i, j) = E(j, i) = std::sqrt(s);
    }
    return E;
}

inline std::vector<std::size_t> voronoi_assign(const Matrix& X, const Matrix& P) {
    return find_winners(X, P).first;
}

inline double quantization_error(const Matrix& X, const Matrix& P) {
    if (X.rows() == 0) throw std::invalid_argument("quantization_error: no samples");
    const auto w = find_winners(X, P);
    double s = 0.0;
    for (double v : w.first_sq_distance) s += v;
    return s / static_cast<double>(X.rows());
}

inline double loss(const Matrix& X, const Matrix& P, const EdgeMask& mask, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("loss: lambda must be non-negative");
    const double q = quantization_error(X, P);
    return lambda == 0.0 ? q : q + lambda * frobenius_norm(edge_matrix(P, mask));
}

/**
 * Voronoi assignment and CHL mask held constant while prototypes move.
 *
 * Caches per-cell sample counts and coordinate sums so the quantization part
 * of the gradient costs O(k d) per evaluation.
 */
struct FrozenStructure {
    std::vector<std::size_t> assignment;
    EdgeMask mask;
    std::vector<std::size_t> counts;
    Matrix cell_sums;
    std::size_t n_samples = 0;

    FrozenStructure() = default;

    FrozenStructure(const Matrix& X, std::vector<std::size_t> assign, EdgeMask m)
        : assignment(std::move(assign)), mask(std::move(m)), counts(mask.k(), 0),
          cell_sums(mask.k(), X.cols()), n_samples(X.rows()) {
        if (assignment.size() != X.rows()) throw DimensionError("FrozenStructure: assignment length mismatch");
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const std::size_t a = assignment[i];
            if (a >= mask.k()) throw std::out_of_range("FrozenStructure: assignment index out of range");
            ++counts[a];
            auto dst = cell_sums.row(a);
            auto src = X.row(i);
            for (std::size_t c = 0; c < X.cols(); ++c) dst[c] += src[c];
        }
    }

    /// Current nearest-prototype assignment and CHL mask of P.
    static FrozenStructure from(const Matrix& X, const Matrix& P) {
        if (P.rows() < 2) throw std::invalid_argument("FrozenStructure: need at least 2 prototypes");
        auto w = find_winners(X, P);
        EdgeMask mask = chl_edges_from(w, P.rows());
        return FrozenStructure(X, std::move(w.first), std::move(mask));
    }
};

/// L = (1/n) sum_i ||x_i - p_{a(i)}||^2 + lambda ||E||_F with assignment and mask frozen.
inline double frozen_loss(const Matrix& X, const Matrix& P, const FrozenStructure& s, double lambda) {
    if (X.cols() != P.cols() || s.assignment.size() != X.rows() || s.mask.k() != P.rows())
        throw DimensionError("frozen_loss: inconsistent shapes");
    double q = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto x = X.row(i);
        auto p = P.row(s.assignment[i]);
        for (std::size_t c = 0; c < X.cols(); ++c) q += (x[c] - p[c]) * (x[c] - p[c]);
    }
    q /= static_cast<double>(X.rows());
    return lambda == 0.0 ? q : q + lambda * frobenius_norm(edge_matrix(P, s.mask));
}

/**
 * Gradient of frozen_loss with respect to the prototype matrix.
 *
 * Row i is (2/n)(m_i p_i - sum_{x in V_i} x) + lambda (2/||E||_F) sum_{j~i} (p_i - p_j).
 * The edge term is dropped when ||E||_F = 0; a coincident connected pair has
 * p_i - p_j = 0 and contributes nothing on its own.
 */
inline Matrix loss_gradient(const Matrix& P, const FrozenStructure& s, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("loss_gradient: lambda must be non-negative");
    if (s.mask.k() != P.rows() || s.cell_sums.cols() != P.cols())
        throw DimensionError("loss_gradient: structure does not match prototypes " + P.shape());
    const std::size_t k = P.rows(), d = P.cols();
    const double scale = 2.0 / static_cast<double>(s.n_samples);
    Matrix G(k, d);
    for (std::size_t i = 0; i < k; ++i) {
        if (s.counts[i] == 0) continue;
        const double m = static_cast<double>(s.counts[i]);
        for (std::size_t c = 0; c < d; ++c) G(i, c) = scale * (m * P(i, c) - s.cell_sums(i, c));
    }
    if (lambda > 0.0) {
        const auto edges = s.mask.edges();
        double sq = 0.0;
        for (auto [i, j] : edges)
            for (std::size_t c = 0; c < d; ++c) sq += 2.0 * (P(i, c) - P(j, c)) * (P(i, c) - P(j, c));
        const double norm = std::sqrt(sq);
        if (norm > 0.0) {
            const double w = lambda * 2.0 / norm;
            for (auto [i, j] : edges) {
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = w * (P(i, c) - P(j, c));
                    G(i, c) += diff;
                    G(j, c) -= diff;
                }
            }
        }
    }
    return G;
}

/// Gradient at P with the structure taken from P itself, then frozen.
inline Matrix loss_gradient(const Matrix& X, const Matrix& P, const EdgeMask& mask, double lambda) {
    if (mask.k() != P.rows()) throw DimensionError("loss_gradient: mask does not match prototypes");
    FrozenStructure s(X, voronoi_assign(X, P), mask);
    return loss_gradient(P, s, lambda);
}

}  // namespace topoclust
