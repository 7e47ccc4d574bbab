#pragma once

// Standalone SVG scatter of a campaign's output space: every output sample
// (small dots colored by epoch), seeds (larger circles) and used targets
// (crosses).

#include "dynsample/dataset.hpp"

#include <cstddef>
#include <string>

namespace dynsample::plot {

struct MarkerCounts {
    std::size_t samples = 0;
    std::size_t seeds = 0;
    std::size_t targets = 0;
};

/// Throws std::out_of_range for bad output indices and dataset::DatasetError
/// for a dataset without runs.
std::string scatter_svg(const dataset::Dataset& ds, std::size_t x_index, std::size_t y_index,
                        MarkerCounts* counts = nullptr);

} // namespace dynsample::plot
