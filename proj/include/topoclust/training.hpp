#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "datasets.hpp"
#include "layers.hpp"
#include "topology.hpp"

namespace topoclust {

inline constexpr double kBaseLearningRate = 0.008;
inline constexpr double kDualLearningRate = 0.0008;

inline double default_learning_rate(Architecture a) {
    return a == Architecture::gbc ? kBaseLearningRate : kDualLearningRate;
}

/**
 * Dual-layer learning rate that keeps the prototype step comparable across
 * data shapes. A dual update moves prototypes by -lr * G * X^T X, and for
 * standardized data trace(X^T X) = n d, so lr = 0.8 / (n d). On a 500 x 2
 * data set this is exactly kDualLearningRate.
 */
inline double scaled_dual_learning_rate(std::size_t n, std::size_t d) {
    return 0.8 / (static_cast<double>(n) * static_cast<double>(d));
}

/// Full-batch steps per epoch when TrainConfig::steps_per_epoch is 0: one per 32-sample batch.
inline std::size_t auto_steps_per_epoch(std::size_t n) { return std::max<std::size_t>(1, (n + 31) / 32); }

struct TrainConfig {
    Architecture architecture = Architecture::dgbc;
    std::size_t epochs = 400;
    double lr = kDualLearningRate;
    double lambda = 0.01;
    std::size_t k = 30;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_sizes{10, 10};
    std::size_t steps_per_epoch = 0;  // 0: auto_steps_per_epoch(n)

    static TrainConfig defaults(Architecture a) {
        TrainConfig c;
        c.architecture = a;
        c.lr = default_learning_rate(a);
        return c;
    }

    void validate() const {
        // lr = 0 is accepted: it turns training into a metrics-only pass over the initialization.
        if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: learning rate must be non-negative");
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be at least 1");
        if (k < 2) throw std::invalid_argument("TrainConfig: k must be at least 2");
        if (lambda < 0.0 || !std::isfinite(lambda)) throw std::invalid_argument("TrainConfig: lambda must be non-negative");
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double quantization_error = 0.0;
    double edge_norm = 0.0;
    std::size_t valid_prototypes = 0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct MetricsTrace {
    std::vector<EpochRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    const EpochRecord& back() const { return records.back(); }
    friend bool operator==(const MetricsTrace&, const MetricsTrace&) = default;
};

struct TrainResult {
    Model model;
    PrototypeSet prototypes;
    MetricsTrace trace;
};

/// Training aborted on a non-finite quantity.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& quantity)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": non-finite " + quantity),
          epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

namespace detail {

/// Prototypes of the current model plus whatever the backward pass needs.
struct ForwardState {
    Matrix prototypes;
    DeepCache cache;
};

inline ForwardState forward(const Model& model, const Matrix& X) {
    if (const auto* deep = std::get_if<DeepDgbcModel>(&model)) {
        auto f = deep_forward(*deep, X);
        return {std::move(f.prototypes), std::move(f.cache)};
    }
    return {model_prototypes(model, X), {}};
}

inline void descend(Model& model, const Matrix& X, const ForwardState& state, const Matrix& G, double lr) {
    std::visit(
        [&](auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GbcModel>) {
                m.W1.add_scaled(G, -lr);
            } else if constexpr (std::is_same_v<T, DgbcModel>) {
                m.W2.add_scaled(dgbc_backward(m, X, G), -lr);
            } else {
                const auto grads = deep_backward(m, state.cache, G);
                for (std::size_t l = 0; l < m.hidden.size(); ++l) m.hidden[l].add_scaled(grads.hidden[l], -lr);
                m.output.add_scaled(grads.output, -lr);
            }
        },
        model);
}

}  // namespace detail

/**
 * Full-batch gradient descent on L = Q + lambda ||E||_F.
 *
 * Each epoch recomputes the Voronoi assignment and CHL mask from the current
 * prototypes, records the epoch metrics, then takes steps_per_epoch gradient
 * steps with that structure frozen.
 */
inline TrainResult train(const TrainConfig& cfg, const Matrix& X, Model model) {
    cfg.validate();
    if (X.rows() == 0) throw std::invalid_argument("train: empty data set");
    const std::size_t steps = cfg.steps_per_epoch == 0 ? auto_steps_per_epoch(X.rows()) : cfg.steps_per_epoch;

    TrainResult result;
    result.trace.records.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto state = detail::forward(model, X);
        if (!state.prototypes.all_finite()) throw TrainingDiverged(epoch, "prototypes");
        if (state.prototypes.rows() < 2) throw std::invalid_argument("train: need at least 2 prototypes");

        const auto winners = find_winners(X, state.prototypes);
        EdgeMask mask = chl_edges_from(winners, state.prototypes.rows());
        const FrozenStructure frozen(X, winners.first, std::move(mask));

        EpochRecord rec;
        rec.epoch = epoch;
        double q = 0.0;
        for (double v : winners.first_sq_distance) q += v;
        rec.quantization_error = q / static_cast<double>(X.rows());
        rec.edge_norm = frobenius_norm(edge_matrix(state.prototypes, frozen.mask));
        for (std::size_t c : frozen.counts) rec.valid_prototypes += c > 0 ? 1 : 0;
        if (!std::isfinite(rec.quantization_error)) throw TrainingDiverged(epoch, "quantization error");
        if (!std::isfinite(rec.edge_norm)) throw TrainingDiverged(epoch, "edge norm");
        result.trace.records.push_back(rec);

        for (std::size_t step = 0; step < steps; ++step) {
            if (step > 0) {
                state = detail::forward(model, X);
                if (!state.prototypes.all_finite()) throw TrainingDiverged(epoch, "prototypes");
            }
            const Matrix G = loss_gradient(state.prototypes, frozen, cfg.lambda);
            if (!G.all_finite()) throw TrainingDiverged(epoch, "gradient");
            detail::descend(model, X, state, G, cfg.lr);
            if (!model_finite(model)) throw TrainingDiverged(epoch, "weights");
        }
    }

    result.prototypes.P = model_prototypes(model, X);
    if (!result.prototypes.P.all_finite()) throw TrainingDiverged(cfg.epochs, "prototypes");
    result.prototypes.mask = chl_edges(X, result.prototypes.P);
    result.model = std::move(model);
    return result;
}

/// Initializes the configured architecture from cfg.seed and trains it.
inline TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
    cfg.validate();
    Rng rng(cfg.seed);
    Model model = init_model(cfg.architecture, cfg.k, ds.features(), ds.samples(), cfg.hidden_sizes, rng, &ds.X);
    return train(cfg, ds.X, std::move(model));
}

struct SeedRun {
    std::uint64_t seed = 0;
    std::optional<TrainResult> result;
    std::string error;  // empty on success

    bool ok() const noexcept { return result.has_value(); }
};

/// One independent run per seed, in seed-list order. Failures are recorded, not thrown.
inline std::vector<SeedRun> multi_seed_run(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                           const Dataset& ds) {
    if (seeds.empty()) throw std::invalid_argument("multi_seed_run: no seeds");
    std::vector<SeedRun> runs;
    runs.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        TrainConfig cfg = base;
        cfg.seed = seed;
        SeedRun run;
        run.seed = seed;
        try {
            run.result = train(cfg, ds);
        } catch (const std::exception& e) {
            run.error = "seed " + std::to_string(seed) + ": " + e.what();
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

inline void write_trace_csv(const MetricsTrace& trace, std::ostream& os) {
    os << "epoch,quantization_error,edge_norm,valid_prototypes\n";
    for (const auto& r : trace.records)
        os << r.epoch << ',' << detail::format_double(r.quantization_error) << ','
           << detail::format_double(r.edge_norm) << ',' << r.valid_prototypes << '\n';
}

}  // namespace topoclust
