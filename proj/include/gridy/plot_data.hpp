#pragma once

#include "gridy/pipeline.hpp"

#include <filesystem>

namespace gridy {

/// Long-format CSVs for plotting a pipeline run into `dir`:
/// rank_frequencies.csv (estimated_rank, count), r2.csv (per-variable R^2) and
/// networks.csv (group, kind, row, column, value) from the group-mean networks.
void write_plot_data(const std::filesystem::path& dir, const MultiBlockDataset& data, const GridyResult& result);

}  // namespace gridy
