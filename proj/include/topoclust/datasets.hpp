#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace topoclust {

struct Dataset {
    Matrix X;
    std::optional<std::vector<int>> labels;
    std::string name;
    std::uint64_t seed = 0;

    std::size_t samples() const noexcept { return X.rows(); }
    std::size_t features() const noexcept { return X.cols(); }

    std::size_t n_classes() const {
        if (!labels || labels->empty()) return 0;
        int top = 0;
        for (int l : *labels) top = std::max(top, l);
        return static_cast<std::size_t>(top) + 1;
    }

    /// Throws std::invalid_argument if labels are misaligned/negative or X is not finite.
    void validate() const {
        if (!X.all_finite()) throw std::invalid_argument("Dataset '" + name + "': non-finite feature value");
        if (!labels) return;
        if (labels->size() != X.rows())
            throw std::invalid_argument("Dataset '" + name + "': " + std::to_string(labels->size()) +
                                        " labels for " + std::to_string(X.rows()) + " samples");
        for (int l : *labels)
            if (l < 0) throw std::invalid_argument("Dataset '" + name + "': negative label");
    }
};

namespace defaults {
inline constexpr double spiral_noise = 0.02;
inline constexpr double moons_noise = 0.05;
inline constexpr double circles_noise = 0.05;
inline constexpr double circles_factor = 0.5;
inline constexpr std::size_t clusters_per_class = 1;
inline constexpr double class_sep = 1.0;
}  // namespace defaults

/// Archimedean spiral r = theta / (4 pi), theta ~ U[0, 4 pi], one class.
inline Dataset gen_spiral(std::size_t n, double noise_sd, Rng& rng) {
    if (n == 0) throw std::invalid_argument("gen_spiral: n must be at least 1");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("gen_spiral: noise_sd must be non-negative");
    constexpr double turn = 4.0 * std::numbers::pi;
    Dataset ds{Matrix(n, 2), std::vector<int>(n, 0), "spiral", rng.seed()};
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = rng.uniform(0.0, turn);
        const double r = theta / turn;
        ds.X(i, 0) = r * std::cos(theta);
        ds.X(i, 1) = r * std::sin(theta);
    }
    if (noise_sd > 0.0)
        for (double& v : ds.X.values()) v += rng.normal(0.0, noise_sd);
    return ds;
}

/// Two interleaved half circles; the first ceil(n/2) samples are class 0.
inline Dataset gen_moons(std::size_t n, double noise_sd, Rng& rng) {
    if (n < 2) throw std::invalid_argument("gen_moons: n must be at least 2");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("gen_moons: noise_sd must be non-negative");
    const std::size_t upper = (n + 1) / 2;
    Dataset ds{Matrix(n, 2), std::vector<int>(n, 0), "moons", rng.seed()};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, std::numbers::pi);
        if (i < upper) {
            ds.X(i, 0) = std::cos(t);
            ds.X(i, 1) = std::sin(t);
        } else {
            ds.X(i, 0) = 1.0 - std::cos(t);
            ds.X(i, 1) = 0.5 - std::sin(t);
            (*ds.labels)[i] = 1;
        }
    }
    if (noise_sd > 0.0)
        for (double& v : ds.X.values()) v += rng.normal(0.0, noise_sd);
    return ds;
}

/// Concentric circles: ceil(n/2) on the unit circle (class 0), the rest at radius factor (class 1).
inline Dataset gen_circles(std::size_t n, double factor, double noise_sd, Rng& rng) {
    if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("gen_circles: factor must lie in (0, 1)");
    if (n < 2) throw std::invalid_argument("gen_circles: n must be at least 2");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("gen_circles: noise_sd must be non-negative");
    const std::size_t outer = (n + 1) / 2;
    Dataset ds{Matrix(n, 2), std::vector<int>(n, 0), "circles", rng.seed()};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = i < outer ? 1.0 : factor;
        ds.X(i, 0) = r * std::cos(t);
        ds.X(i, 1) = r * std::sin(t);
        if (i >= outer) (*ds.labels)[i] = 1;
    }
    if (noise_sd > 0.0)
        for (double& v : ds.X.values()) v += rng.normal(0.0, noise_sd);
    return ds;
}

/**
 * Gaussian clusters around distinct vertices of the hypercube {-sep, +sep}^n_f.
 *
 * 2 * clusters_per_class vertices are drawn; cluster c belongs to class c % 2.
 * Samples are dealt to clusters in contiguous blocks whose sizes differ by at
 * most one; every sample is its vertex plus unit-variance noise per feature.
 */
inline Dataset gen_hypercube_clusters(std::size_t n_samples, std::size_t n_features,
                                      std::size_t clusters_per_class, double class_sep, Rng& rng) {
    if (clusters_per_class == 0) throw std::invalid_argument("gen_hypercube_clusters: clusters_per_class must be >= 1");
    const std::size_t n_clusters = 2 * clusters_per_class;
    if (n_samples < n_clusters)
        throw std::invalid_argument("gen_hypercube_clusters: need at least " + std::to_string(n_clusters) +
                                    " samples");
    if (n_features == 0) throw std::invalid_argument("gen_hypercube_clusters: n_features must be >= 1");
    if (n_features < 63 && (std::uint64_t{1} << n_features) < n_clusters)
        throw std::invalid_argument("gen_hypercube_clusters: a " + std::to_string(n_features) +
                                    "-cube has fewer than " + std::to_string(n_clusters) + " vertices");

    std::vector<std::vector<bool>> vertices;
    std::set<std::vector<bool>> seen;
    const bool enumerate = n_features < 20 && (std::uint64_t{1} << n_features) <= 4 * n_clusters;
    if (enumerate) {
        const auto picks = rng.sample_without_replacement(std::size_t{1} << n_features, n_clusters);
        for (std::size_t code : picks) {
            std::vector<bool> v(n_features);
            for (std::size_t f = 0; f < n_features; ++f) v[f] = (code >> f) & 1U;
            vertices.push_back(std::move(v));
        }
    } else {
        while (vertices.size() < n_clusters) {
            std::vector<bool> v(n_features);
            for (std::size_t f = 0; f < n_features; ++f) v[f] = (rng.next_u64() >> 63) != 0;
            if (seen.insert(v).second) vertices.push_back(std::move(v));
        }
    }

    Dataset ds{Matrix(n_samples, n_features), std::vector<int>(n_samples, 0), "hypercube", rng.seed()};
    const std::size_t base = n_samples / n_clusters;
    const std::size_t extra = n_samples % n_clusters;
    std::size_t row = 0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const std::size_t count = base + (c < extra ? 1 : 0);
        for (std::size_t s = 0; s < count; ++s, ++row) {
            for (std::size_t f = 0; f < n_features; ++f)
                ds.X(row, f) = (vertices[c][f] ? class_sep : -class_sep) + rng.normal();
            (*ds.labels)[row] = static_cast<int>(c % 2);
        }
    }
    return ds;
}

/// Per-feature z-scores with population variance; constant columns become zero.
inline Dataset standardize(const Dataset& ds) {
    const std::size_t n = ds.samples();
    if (n < 2) throw std::invalid_argument("standardize: need at least 2 samples");
    Dataset out = ds;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += ds.X(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double t = ds.X(r, c) - mean;
            var += t * t;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(mean));
        for (std::size_t r = 0; r < n; ++r) out.X(r, c) = constant ? 0.0 : (ds.X(r, c) - mean) / sd;
    }
    return out;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("dataset csv line " + std::to_string(line) + ": bad number '" +
                                    std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Header f0,...,f{d-1},label; label -1 when the dataset has none. Shortest round-trip decimals, LF endings.
inline void write_dataset_csv(const Dataset& ds, std::ostream& os) {
    for (std::size_t c = 0; c < ds.features(); ++c) os << 'f' << c << ',';
    os << "label\n";
    for (std::size_t r = 0; r < ds.samples(); ++r) {
        for (std::size_t c = 0; c < ds.features(); ++c) os << detail::format_double(ds.X(r, c)) << ',';
        os << (ds.labels ? (*ds.labels)[r] : -1) << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& is, std::string name = "csv") {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("dataset csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_commas(line);
    if (header.size() < 2 || header.back() != "label")
        throw std::invalid_argument("dataset csv: header must be f0,...,f{d-1},label");
    const std::size_t d = header.size() - 1;
    for (std::size_t c = 0; c < d; ++c)
        if (header[c] != "f" + std::to_string(c))
            throw std::invalid_argument("dataset csv: unexpected column name '" + std::string(header[c]) + "'");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_commas(line);
        if (fields.size() != d + 1)
            throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(d + 1) + " fields, got " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < d; ++c) values.push_back(detail::parse_double(fields[c], line_no));
        int label = 0;
        auto res = std::from_chars(fields[d].data(), fields[d].data() + fields[d].size(), label);
        if (res.ec != std::errc{} || res.ptr != fields[d].data() + fields[d].size() || label < -1)
            throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": bad label");
        labels.push_back(label);
    }
    const std::size_t n = labels.size();
    Dataset ds{Matrix(n, d, std::move(values)), std::nullopt, std::move(name), 0};
    const auto unlabeled = std::count(labels.begin(), labels.end(), -1);
    if (unlabeled == 0 && n > 0)
        ds.labels = std::move(labels);
    else if (unlabeled != static_cast<std::ptrdiff_t>(n))
        throw std::invalid_argument("dataset csv: labels must be all present or all -1");
    ds.validate();
    return ds;
}

}  // namespace topoclust
