#include "dynsample/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <stdexcept>

namespace dynsample::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

constexpr std::array<const char*, 8> kEpochColors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::optional<std::size_t> position_in(const std::vector<std::size_t>& subset, std::size_t index) {
    const auto it = std::find(subset.begin(), subset.end(), index);
    if (it == subset.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(std::distance(subset.begin(), it));
}

struct Axis {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double map(double v, double pixel_lo, double pixel_hi) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return pixel_lo + (v - lo) / span * (pixel_hi - pixel_lo);
    }
};

} // namespace

std::string scatter_svg(const dataset::Dataset& ds, std::size_t x_index, std::size_t y_index,
                        MarkerCounts* counts) {
    if (ds.runs.empty()) {
        throw dataset::DatasetError("plot: dataset has no runs");
    }
    if (x_index >= ds.meta.n_outputs || y_index >= ds.meta.n_outputs) {
        throw std::out_of_range(fmt::format("plot: output indices ({}, {}) out of range ({} outputs)",
                                            x_index, y_index, ds.meta.n_outputs));
    }
    const auto px = position_in(ds.meta.output_subset, x_index);
    const auto py = position_in(ds.meta.output_subset, y_index);
    const bool geometric = px && py;

    struct Marker {
        double x;
        double y;
        std::size_t epoch;
    };
    std::vector<Marker> samples;
    std::vector<Marker> seeds;
    std::vector<Marker> targets;
    Axis ax;
    Axis ay;
    for (const auto& r : ds.runs) {
        for (const auto& y : r.trajectory.outputs) {
            samples.push_back({y[x_index], y[y_index], r.epoch});
            ax.include(y[x_index]);
            ay.include(y[y_index]);
        }
        if (geometric && r.seed) {
            const auto raw = ds.meta.epochs.at(r.epoch).output_normalization.invert(r.seed->y_bar);
            seeds.push_back({raw[*px], raw[*py], r.epoch});
        }
    }
    if (geometric) {
        for (const auto& e : ds.meta.epochs) {
            for (const auto& t : e.used_targets) {
                targets.push_back({t.t_star_raw[*px], t.t_star_raw[*py], e.epoch});
            }
        }
    }
    for (const auto& m : seeds) {
        ax.include(m.x);
        ay.include(m.y);
    }
    for (const auto& m : targets) {
        ax.include(m.x);
        ay.include(m.y);
    }

    auto sx = [&](double v) { return ax.map(v, kMargin, kWidth - kMargin / 2); };
    auto sy = [&](double v) { return ay.map(v, kHeight - kMargin, kMargin / 2); };
    auto color = [](std::size_t epoch) { return kEpochColors[epoch % kEpochColors.size()]; };

    std::string svg = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        kWidth, kHeight);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n",
                       kMargin, kHeight - kMargin, kWidth - kMargin / 2);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
                       kMargin, kHeight - kMargin, kMargin / 2);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">y[{}]</text>\n",
                       kWidth / 2, kHeight - 20.0, x_index);
    svg += fmt::format("<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" font-size=\"14\" "
                       "transform=\"rotate(-90 20 {0})\">y[{1}]</text>\n",
                       kHeight / 2, y_index);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\">{:.6g}</text>\n", kMargin,
                       kHeight - kMargin + 14, ax.lo);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.6g}</text>\n",
                       kWidth - kMargin / 2, kHeight - kMargin + 14, ax.hi);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.6g}</text>\n",
                       kMargin - 4, kHeight - kMargin, ay.lo);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.6g}</text>\n",
                       kMargin - 4, kMargin / 2 + 4, ay.hi);

    svg += "<g class=\"samples\">\n";
    for (const auto& m : samples) {
        svg += fmt::format("<circle class=\"sample\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1\" fill=\"{}\" "
                           "fill-opacity=\"0.4\"/>\n",
                           sx(m.x), sy(m.y), color(m.epoch));
    }
    svg += "</g>\n<g class=\"seeds\">\n";
    for (const auto& m : seeds) {
        svg += fmt::format("<circle class=\"seed\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\" "
                           "stroke=\"black\"/>\n",
                           sx(m.x), sy(m.y), color(m.epoch));
    }
    svg += "</g>\n<g class=\"targets\">\n";
    for (const auto& m : targets) {
        const double cx = sx(m.x);
        const double cy = sy(m.y);
        svg += fmt::format("<path class=\"target\" d=\"M{:.2f} {:.2f} L{:.2f} {:.2f} M{:.2f} {:.2f} "
                           "L{:.2f} {:.2f}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
                           cx - 4, cy - 4, cx + 4, cy + 4, cx - 4, cy + 4, cx + 4, cy - 4);
    }
    svg += "</g>\n</svg>\n";

    if (counts != nullptr) {
        *counts = {samples.size(), seeds.size(), targets.size()};
    }
    return svg;
}

} // namespace dynsample::plot
