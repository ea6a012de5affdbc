#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "matrix.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace topoclust {

enum class Architecture { gbc, dgbc, deep_dgbc };

inline std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::gbc: return "gbc";
        case Architecture::dgbc: return "dgbc";
        case Architecture::deep_dgbc: return "deep_dgbc";
    }
    return "?";
}

inline Architecture parse_architecture(std::string_view s) {
    if (s == "gbc") return Architecture::gbc;
    if (s == "dgbc") return Architecture::dgbc;
    if (s == "deep_dgbc" || s == "deep") return Architecture::deep_dgbc;
    throw std::invalid_argument("unknown architecture '" + std::string(s) + "' (expected gbc, dgbc or deep_dgbc)");
}

/// Base competitive layer: the k x d weight matrix is the prototype matrix.
struct GbcModel {
    Matrix W1;
};

/// Dual layer over the transposed data: prototypes = W2 (k x n) * X (n x d).
struct DgbcModel {
    Matrix W2;
};

/**
 * Dense stack fed with X^T (d x n). Hidden layers are tanh, the output is
 * linear: H_0 = X^T, H_l = tanh(H_{l-1} V_l), prototypes^T = H_L V_out.
 */
struct DeepDgbcModel {
    std::vector<Matrix> hidden;  // V_1: n x h_1, V_2: h_1 x h_2, ...
    Matrix output;               // h_L x k (n x k without hidden layers)
};

using Model = std::variant<GbcModel, DgbcModel, DeepDgbcModel>;

inline Architecture architecture_of(const Model& m) {
    return static_cast<Architecture>(m.index());
}

// ---------------------------------------------------------------------------
// GBC

inline const Matrix& gbc_prototypes(const GbcModel& m) { return m.W1; }

// ---------------------------------------------------------------------------
// DGBC

inline Matrix dgbc_forward(const DgbcModel& m, const Matrix& X) {
    if (m.W2.cols() != X.rows())
        throw DimensionError("dgbc_forward: W2 is " + m.W2.shape() + " but data has " + std::to_string(X.rows()) +
                             " samples");
    return matmul(m.W2, X);
}

/// dL/dW2 = G X^T for a prototype-level gradient G (k x d).
inline Matrix dgbc_backward(const DgbcModel& m, const Matrix& X, const Matrix& G) {
    if (m.W2.cols() != X.rows() || G.rows() != m.W2.rows() || G.cols() != X.cols())
        throw DimensionError("dgbc_backward: W2 " + m.W2.shape() + ", X " + X.shape() + ", G " + G.shape());
    return matmul_nt(G, X);
}

// ---------------------------------------------------------------------------
// Deep DGBC

struct DeepCache {
    std::vector<Matrix> activations;  // H_0 = X^T, H_1, ..., H_L
};

struct DeepForward {
    Matrix prototypes;
    DeepCache cache;
};

struct DeepGradients {
    std::vector<Matrix> hidden;
    Matrix output;
};

inline void check_deep_chain(const DeepDgbcModel& m, std::size_t n) {
    std::size_t width = n;
    for (std::size_t l = 0; l < m.hidden.size(); ++l) {
        if (m.hidden[l].rows() != width)
            throw DimensionError("deep model: hidden layer " + std::to_string(l) + " is " + m.hidden[l].shape() +
                                 ", expected " + std::to_string(width) + " inputs");
        width = m.hidden[l].cols();
    }
    if (m.output.rows() != width)
        throw DimensionError("deep model: output layer is " + m.output.shape() + ", expected " +
                             std::to_string(width) + " inputs");
}

inline DeepForward deep_forward(const DeepDgbcModel& m, const Matrix& X) {
    check_deep_chain(m, X.rows());
    DeepForward out;
    out.cache.activations.reserve(m.hidden.size() + 1);
    out.cache.activations.push_back(X.transposed());
    for (const Matrix& V : m.hidden) {
        Matrix H = matmul(out.cache.activations.back(), V);
        for (double& v : H.values()) v = std::tanh(v);
        out.cache.activations.push_back(std::move(H));
    }
    out.prototypes = matmul(out.cache.activations.back(), m.output).transposed();
    return out;
}

/// Reverse accumulation from the prototype gradient G (k x d) to every weight matrix.
inline DeepGradients deep_backward(const DeepDgbcModel& m, const DeepCache& cache, const Matrix& G) {
    const auto& H = cache.activations;
    if (H.size() != m.hidden.size() + 1)
        throw DimensionError("deep_backward: cache holds " + std::to_string(H.size()) + " activations for " +
                             std::to_string(m.hidden.size()) + " hidden layers");
    check_deep_chain(m, H.front().cols());
    for (std::size_t l = 0; l < m.hidden.size(); ++l)
        if (H[l + 1].rows() != H[0].rows() || H[l + 1].cols() != m.hidden[l].cols())
            throw DimensionError("deep_backward: stale cache at layer " + std::to_string(l));
    if (G.rows() != m.output.cols() || G.cols() != H[0].rows())
        throw DimensionError("deep_backward: gradient " + G.shape() + " does not match prototypes " +
                             Matrix::shape_string(m.output.cols(), H[0].rows()));

    DeepGradients grads;
    grads.hidden.resize(m.hidden.size());
    const Matrix dP = G.transposed();  // d x k
    grads.output = matmul_tn(H.back(), dP);
    Matrix dH = matmul_nt(dP, m.output);
    for (std::size_t l = m.hidden.size(); l-- > 0;) {
        const Matrix& act = H[l + 1];
        for (std::size_t i = 0; i < dH.size(); ++i) {
            const double a = act.values()[i];
            dH.values()[i] *= 1.0 - a * a;
        }
        grads.hidden[l] = matmul_tn(H[l], dH);
        if (l > 0) dH = matmul_nt(dH, m.hidden[l]);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Generic access

inline Matrix model_prototypes(const Model& model, const Matrix& X) {
    return std::visit(
        [&](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GbcModel>) {
                if (m.W1.cols() != X.cols())
                    throw DimensionError("gbc model has " + std::to_string(m.W1.cols()) + " features, data has " +
                                         std::to_string(X.cols()));
                return m.W1;
            } else if constexpr (std::is_same_v<T, DgbcModel>) {
                return dgbc_forward(m, X);
            } else {
                return deep_forward(m, X).prototypes;
            }
        },
        model);
}

inline std::size_t prototype_count(const Model& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GbcModel>) return m.W1.rows();
            else if constexpr (std::is_same_v<T, DgbcModel>) return m.W2.rows();
            else return m.output.cols();
        },
        model);
}

inline bool model_finite(const Model& model) {
    return std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GbcModel>) return m.W1.all_finite();
            else if constexpr (std::is_same_v<T, DgbcModel>) return m.W2.all_finite();
            else
                return m.output.all_finite() &&
                       std::all_of(m.hidden.begin(), m.hidden.end(), [](const Matrix& v) { return v.all_finite(); });
        },
        model);
}

// ---------------------------------------------------------------------------
// Initialization

/**
 * GBC: k distinct rows of samples when given and k <= n, else N(0, 0.5^2).
 * DGBC: N(0, 1/n). Deep: every matrix N(0, 1/fan_in).
 */
inline Model init_model(Architecture kind, std::size_t k, std::size_t d, std::size_t n,
                        std::span<const std::size_t> hidden_sizes, Rng& rng, const Matrix* samples = nullptr) {
    if (k < 2) throw std::invalid_argument("init_model: need at least 2 prototypes");
    switch (kind) {
        case Architecture::gbc: {
            if (samples && samples->cols() != d) throw DimensionError("init_model: sample matrix width differs from d");
            if (samples && k <= samples->rows()) {
                Matrix W(k, d);
                const auto rows = rng.sample_without_replacement(samples->rows(), k);
                for (std::size_t i = 0; i < k; ++i) std::ranges::copy(samples->row(rows[i]), W.row(i).begin());
                return GbcModel{std::move(W)};
            }
            return GbcModel{gaussian_matrix(k, d, 0.5, rng)};
        }
        case Architecture::dgbc:
            if (n == 0) throw std::invalid_argument("init_model: dual layer needs n >= 1");
            return DgbcModel{gaussian_matrix(k, n, 1.0 / std::sqrt(static_cast<double>(n)), rng)};
        case Architecture::deep_dgbc: {
            if (n == 0) throw std::invalid_argument("init_model: dual layer needs n >= 1");
            DeepDgbcModel m;
            std::size_t fan_in = n;
            for (std::size_t h : hidden_sizes) {
                if (h == 0) throw std::invalid_argument("init_model: hidden layer width must be positive");
                m.hidden.push_back(gaussian_matrix(fan_in, h, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
                fan_in = h;
            }
            m.output = gaussian_matrix(fan_in, k, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
            return m;
        }
    }
    throw std::invalid_argument("init_model: unknown architecture");
}

// ---------------------------------------------------------------------------
// Duality conditions

struct DualityReport {
    bool features_orthonormal = false;  // X^T X = I_d
    double features_deviation = 0.0;
    bool samples_orthonormal = false;   // X X^T = I_n
    double samples_deviation = 0.0;
};

inline DualityReport check_duality_conditions(const Matrix& X, double tol = 1e-10) {
    DualityReport r;
    r.features_deviation = max_abs_diff(matmul_tn(X, X), Matrix::identity(X.cols()));
    r.samples_deviation = max_abs_diff(matmul_nt(X, X), Matrix::identity(X.rows()));
    r.features_orthonormal = r.features_deviation <= tol;
    r.samples_orthonormal = r.samples_deviation <= tol;
    return r;
}

// ---------------------------------------------------------------------------
// Persistence: {"kind", "k", "d", "n", "hidden_sizes", "weights": [{"rows","cols","data"}...]}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

inline nlohmann::json model_to_json(const Model& model, std::size_t d, std::size_t n) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(architecture_of(model)));
    j["k"] = prototype_count(model);
    j["d"] = d;
    j["n"] = n;
    std::vector<std::size_t> hidden;
    nlohmann::json weights = nlohmann::json::array();
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GbcModel>) {
                weights.push_back(matrix_to_json(m.W1));
            } else if constexpr (std::is_same_v<T, DgbcModel>) {
                weights.push_back(matrix_to_json(m.W2));
            } else {
                for (const Matrix& v : m.hidden) {
                    hidden.push_back(v.cols());
                    weights.push_back(matrix_to_json(v));
                }
                weights.push_back(matrix_to_json(m.output));
            }
        },
        model);
    j["hidden_sizes"] = hidden;
    j["weights"] = std::move(weights);
    return j;
}

struct LoadedModel {
    Model model;
    std::size_t d = 0;
    std::size_t n = 0;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
    const Architecture kind = parse_architecture(j.at("kind").get<std::string>());
    const auto k = j.at("k").get<std::size_t>();
    LoadedModel out;
    out.d = j.at("d").get<std::size_t>();
    out.n = j.at("n").get<std::size_t>();
    const auto hidden = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    const auto& w = j.at("weights");
    auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* what) {
        if (m.rows() != r || m.cols() != c)
            throw DimensionError(std::string("model file: ") + what + " is " + m.shape() + ", expected " +
                                 Matrix::shape_string(r, c));
    };
    switch (kind) {
        case Architecture::gbc: {
            Matrix W1 = matrix_from_json(w.at(0));
            expect(W1, k, out.d, "W1");
            out.model = GbcModel{std::move(W1)};
            break;
        }
        case Architecture::dgbc: {
            Matrix W2 = matrix_from_json(w.at(0));
            expect(W2, k, out.n, "W2");
            out.model = DgbcModel{std::move(W2)};
            break;
        }
        case Architecture::deep_dgbc: {
            if (w.size() != hidden.size() + 1) throw DimensionError("model file: weight count does not match hidden_sizes");
            DeepDgbcModel m;
            std::size_t fan_in = out.n;
            for (std::size_t l = 0; l < hidden.size(); ++l) {
                m.hidden.push_back(matrix_from_json(w.at(l)));
                expect(m.hidden.back(), fan_in, hidden[l], "hidden layer");
                fan_in = hidden[l];
            }
            m.output = matrix_from_json(w.at(hidden.size()));
            expect(m.output, fan_in, k, "output layer");
            out.model = std::move(m);
            break;
        }
    }
    if (!model_finite(out.model)) throw std::invalid_argument("model file: non-finite weight");
    return out;
}

inline void save_model(const std::string& path, const Model& model, std::size_t d, std::size_t n) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write model file " + path);
    os << model_to_json(model, d, n).dump(1) << '\n';
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read model file " + path);
    return model_from_json(nlohmann::json::parse(is));
}

}  // namespace topoclust
