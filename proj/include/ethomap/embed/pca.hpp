#pragma once

#include "ethomap/embed/coordinates.hpp"
#include "ethomap/windows.hpp"

#include <filesystem>
#include <vector>

namespace ethomap::embed {

struct PcaModel {
    std::vector<double> mean;
    std::size_t input_dims = 0;
    // dims rows of input_dims values, orthonormal
    std::vector<std::vector<double>> components;
    std::vector<double> explained_variance;
    std::vector<double> explained_variance_ratio;
    double total_variance = 0.0;
};

/// Eigendecomposition of the sample covariance (divisor N - 1). Each component is
/// signed so its largest-magnitude entry is positive.
PcaModel pca_fit(const windows::DataMatrix& data, std::size_t dims = 2);
Coordinates pca_transform(const PcaModel& model, const windows::DataMatrix& data);

/// pca.json (model) + pca.f32 (coordinates) + windows.index.csv
void save_pca(const PcaModel& model, const Coordinates& coords, const std::vector<windows::WindowRef>& index,
              const std::filesystem::path& directory);

} // namespace ethomap::embed
