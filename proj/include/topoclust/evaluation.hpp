#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "datasets.hpp"
#include "disjoint_set.hpp"
#include "topology.hpp"

namespace topoclust {

/// Number of prototypes that win at least one sample.
inline std::size_t valid_prototype_count(const Matrix& X, const Matrix& P) {
    std::vector<bool> won(P.rows(), false);
    for (std::size_t w : voronoi_assign(X, P)) won[w] = true;
    return static_cast<std::size_t>(std::count(won.begin(), won.end(), true));
}

inline constexpr std::size_t kNoComponent = std::numeric_limits<std::size_t>::max();

/**
 * Component id of every prototype in `kept` over the kept-induced subgraph.
 * Ids are contiguous from 0 and ordered by the smallest member index;
 * prototypes outside `kept` get kNoComponent.
 */
inline std::vector<std::size_t> connected_components(const EdgeMask& mask, const std::vector<std::size_t>& kept) {
    const std::size_t k = mask.k();
    std::vector<bool> in(k, false);
    for (std::size_t i : kept) {
        if (i >= k) throw std::out_of_range("connected_components: kept index " + std::to_string(i) + " >= k");
        in[i] = true;
    }
    DisjointSet ds(k);
    for (auto [i, j] : mask.edges())
        if (in[i] && in[j]) ds.unite(i, j);

    std::vector<std::size_t> comp(k, kNoComponent);
    std::vector<std::size_t> root_id(k, kNoComponent);
    std::size_t next = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!in[i]) continue;
        const std::size_t r = ds.find(i);
        if (root_id[r] == kNoComponent) root_id[r] = next++;
        comp[i] = root_id[r];
    }
    return comp;
}

struct ClusteringResult {
    std::vector<std::size_t> kept_prototypes;   // ascending prototype indices
    std::vector<std::size_t> component_of;      // per prototype; kNoComponent when pruned
    std::vector<std::size_t> sample_component;  // per sample, via nearest kept prototype
    std::size_t n_components = 0;
};

/**
 * Drops prototypes that have no CHL edge and an empty Voronoi set, then maps
 * every sample to the component of its nearest kept prototype.
 */
inline ClusteringResult prune(const Matrix& X, const PrototypeSet& ps) {
    const std::size_t k = ps.P.rows();
    if (ps.mask.k() != k) throw DimensionError("prune: mask does not match prototypes");
    if (X.rows() == 0) throw std::invalid_argument("prune: no samples");
    const auto assign = voronoi_assign(X, ps.P);
    std::vector<bool> won(k, false);
    for (std::size_t w : assign) won[w] = true;

    ClusteringResult r;
    for (std::size_t i = 0; i < k; ++i)
        if (won[i] || ps.mask.degree(i) > 0) r.kept_prototypes.push_back(i);
    // the winner of sample 0 is always kept
    if (r.kept_prototypes.empty()) throw std::logic_error("prune: every prototype was pruned");

    r.component_of = connected_components(ps.mask, r.kept_prototypes);
    for (std::size_t c : r.component_of)
        if (c != kNoComponent) r.n_components = std::max(r.n_components, c + 1);

    // Every winner is kept, so the nearest kept prototype is the plain winner.
    r.sample_component.resize(X.rows());
    for (std::size_t s = 0; s < X.rows(); ++s) r.sample_component[s] = r.component_of[assign[s]];
    return r;
}

/// Sum over components of the majority-class count, divided by n.
inline double cluster_accuracy(const ClusteringResult& r, const std::optional<std::vector<int>>& labels) {
    if (!labels) throw std::invalid_argument("cluster_accuracy: data set has no labels");
    if (labels->size() != r.sample_component.size())
        throw DimensionError("cluster_accuracy: " + std::to_string(labels->size()) + " labels for " +
                             std::to_string(r.sample_component.size()) + " samples");
    if (labels->empty()) throw std::invalid_argument("cluster_accuracy: no samples");
    std::vector<std::map<int, std::size_t>> counts(r.n_components);
    for (std::size_t s = 0; s < labels->size(); ++s) ++counts.at(r.sample_component[s])[(*labels)[s]];
    std::size_t correct = 0;
    for (const auto& c : counts) {
        std::size_t best = 0;
        for (const auto& [label, count] : c) best = std::max(best, count);
        correct += best;
    }
    return static_cast<double>(correct) / static_cast<double>(labels->size());
}

struct EvaluationReport {
    std::optional<double> accuracy;
    std::size_t components = 0;
    std::size_t valid_prototypes = 0;
    std::size_t kept = 0;
};

inline EvaluationReport evaluate(const Matrix& X, const std::optional<std::vector<int>>& labels,
                                 const PrototypeSet& ps) {
    const auto result = prune(X, ps);
    EvaluationReport rep;
    if (labels) rep.accuracy = cluster_accuracy(result, labels);
    rep.components = result.n_components;
    rep.valid_prototypes = valid_prototype_count(X, ps.P);
    rep.kept = result.kept_prototypes.size();
    return rep;
}

/// key=value lines; accuracy is omitted for unlabeled data.
inline void write_report(const EvaluationReport& rep, std::ostream& os) {
    if (rep.accuracy) os << "accuracy=" << detail::format_double(*rep.accuracy) << '\n';
    os << "components=" << rep.components << '\n';
    os << "valid_prototypes=" << rep.valid_prototypes << '\n';
    os << "kept=" << rep.kept << '\n';
}

}  // namespace topoclust
