#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "matrix.hpp"
#include "rng.hpp"

namespace topoclust {

/// Entry (i, j) is the squared Euclidean distance between row i of a and row j of b.
inline Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("pairwise_sq_distances: " + a.shape() + " vs " + b.shape() +
                             " (feature counts differ)");
    Matrix out(a.rows(), b.rows());
    const std::size_t d = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* x = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* p = b.row(j).data();
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double t = x[c] - p[c];
                s += t * t;
            }
            out(i, j) = s;
        }
    }
    return out;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return std::sqrt(s);
}

/**
 * Central-difference gradient of a scalar function of a matrix.
 *
 * Each entry is perturbed by +-h in turn; the matrix is restored afterwards.
 * Throws std::domain_error naming the entry if f is not finite at either
 * perturbed point.
 */
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, Matrix m,
                                         double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be positive");
    Matrix grad(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double orig = m(r, c);
            m(r, c) = orig + h;
            const double up = f(m);
            m(r, c) = orig - h;
            const double down = f(m);
            m(r, c) = orig;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw std::domain_error("finite_difference_gradient: non-finite function value at entry (" +
                                        std::to_string(r) + ", " + std::to_string(c) + ")");
            grad(r, c) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

/**
 * Modified Gram-Schmidt on the columns of m.
 *
 * Columns that become numerically dependent are replaced by fresh Gaussian
 * columns drawn from rng and re-orthogonalized. Each output column is
 * sign-normalized so its first nonzero entry is positive.
 */
inline Matrix orthonormalize_columns(const Matrix& m, Rng& rng) {
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    if (d > n)
        throw DimensionError("orthonormalize_columns: " + std::to_string(d) + " columns cannot be orthonormal in " +
                             std::to_string(n) + " dimensions");
    Matrix q = m;
    constexpr double kRankTol = 1e-10;

    auto column_norm = [&](std::size_t j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += q(i, j) * q(i, j);
        return std::sqrt(s);
    };

    for (std::size_t j = 0; j < d; ++j) {
        const double original = std::max(column_norm(j), 1.0);
        for (int attempt = 0;; ++attempt) {
            // two passes keep the result orthogonal to working precision
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < j; ++p) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) dot += q(i, p) * q(i, j);
                    for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, p);
                }
            }
            const double norm = column_norm(j);
            if (norm > kRankTol * original) {
                for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
                break;
            }
            if (attempt > 100) throw std::runtime_error("orthonormalize_columns: could not regenerate column");
            for (std::size_t i = 0; i < n; ++i) q(i, j) = rng.normal();
        }
    }

    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(q(i, j)) > 1e-14) {
                if (q(i, j) < 0.0)
                    for (std::size_t r = 0; r < n; ++r) q(r, j) = -q(r, j);
                break;
            }
        }
    }
    return q;
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double sd, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal(0.0, sd);
    return m;
}

}  // namespace topoclust
