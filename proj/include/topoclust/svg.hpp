#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "matrix.hpp"
#include "topology.hpp"

namespace topoclust {

/// Maps the bounding box of the plotted points onto an 800 x 800 canvas with a 5% margin (y grows upwards).
class SvgFrame {
public:
    static constexpr double kCanvas = 800.0;
    static constexpr double kMargin = 0.05 * kCanvas;

    SvgFrame(double xmin, double xmax, double ymin, double ymax)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {}

    double x(double v) const { return map(v, xmin_, xmax_); }
    double y(double v) const { return kCanvas - map(v, ymin_, ymax_); }

private:
    static double map(double v, double lo, double hi) {
        const double span = hi - lo;
        if (!(span > 0.0)) return kCanvas / 2.0;
        return kMargin + (v - lo) / span * (kCanvas - 2.0 * kMargin);
    }

    double xmin_, xmax_, ymin_, ymax_;
};

/// Frame over all samples and the kept prototypes.
inline SvgFrame frame_for(const Matrix& X, const Matrix& P, const std::vector<std::size_t>& kept) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double xmin = inf, xmax = -inf, ymin = inf, ymax = -inf;
    auto extend = [&](std::span<const double> p) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    };
    for (std::size_t i = 0; i < X.rows(); ++i) extend(X.row(i));
    for (std::size_t i : kept) extend(P.row(i));
    return {xmin, xmax, ymin, ymax};
}

namespace detail {

inline const char* label_color(int label) {
    static constexpr std::array<const char*, 10> palette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[static_cast<std::size_t>(label) % palette.size()];
}

inline std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/**
 * SVG 1.1 scatter of a 2-D solution: one <circle class="sample"> per sample
 * (colored by label, gray when unlabeled), one <line> per CHL edge between
 * kept prototypes, one <circle class="prototype"> per kept prototype.
 */
inline std::string render_svg(const Matrix& X, const std::optional<std::vector<int>>& labels, const PrototypeSet& ps,
                              const ClusteringResult& clustering) {
    if (X.cols() != 2 || ps.P.cols() != 2)
        throw DimensionError("render_svg: plots need 2 features, got " + std::to_string(X.cols()) +
                             "; export the trace CSV instead");
    if (labels && labels->size() != X.rows()) throw DimensionError("render_svg: label count mismatch");
    const auto& kept = clustering.kept_prototypes;
    const SvgFrame frame = frame_for(X, ps.P, kept);
    std::vector<bool> is_kept(ps.P.rows(), false);
    for (std::size_t i : kept) is_kept[i] = true;

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
          "viewBox=\"0 0 800 800\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n";

    os << "<g id=\"samples\">\n";
    for (std::size_t s = 0; s < X.rows(); ++s) {
        const char* color = labels ? detail::label_color((*labels)[s]) : "#9e9e9e";
        os << "<circle class=\"sample\" cx=\"" << detail::fmt_coord(frame.x(X(s, 0))) << "\" cy=\""
           << detail::fmt_coord(frame.y(X(s, 1))) << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
    }
    os << "</g>\n<g id=\"edges\">\n";
    for (auto [i, j] : ps.mask.edges()) {
        if (!is_kept[i] || !is_kept[j]) continue;
        os << "<line class=\"edge\" x1=\"" << detail::fmt_coord(frame.x(ps.P(i, 0))) << "\" y1=\""
           << detail::fmt_coord(frame.y(ps.P(i, 1))) << "\" x2=\"" << detail::fmt_coord(frame.x(ps.P(j, 0)))
           << "\" y2=\"" << detail::fmt_coord(frame.y(ps.P(j, 1))) << "\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n";
    }
    os << "</g>\n<g id=\"prototypes\">\n";
    for (std::size_t i : kept) {
        os << "<circle class=\"prototype\" cx=\"" << detail::fmt_coord(frame.x(ps.P(i, 0))) << "\" cy=\""
           << detail::fmt_coord(frame.y(ps.P(i, 1))) << "\" r=\"5\" fill=\"#000000\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace topoclust
