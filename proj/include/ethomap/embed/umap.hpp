#pragma once

#include "ethomap/embed/coordinates.hpp"
#include "ethomap/embed/curve.hpp"
#include "ethomap/embed/layout.hpp"
#include "ethomap/windows.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace ethomap::embed {

struct UmapParams {
    std::size_t n_neighbors = 200;
    double min_dist = 0.0;
    double spread = 1.0;
    std::size_t epochs = 500;
    std::uint64_t seed = 7;
    double negative_rate = 5.0;
    double learning_rate = 1.0;
    InitMethod init = InitMethod::Spectral;
    std::size_t dims = 2;
    unsigned threads = 1;  // SGD workers; kNN always uses knn_threads
    unsigned knn_threads = 1;

    void validate() const;
};

inline constexpr std::size_t kTransformEpochs = 30;

struct EmbeddingModel {
    Coordinates coords;
    CurveParams curve;
    UmapParams params;
    std::vector<windows::WindowRef> provenance;
    std::shared_ptr<const windows::DataMatrix> training;
    std::string training_path;  // directory of the windows dataset the model was fit on

    std::size_t size() const { return coords.rows; }
};

/// kNN graph, fuzzy calibration, curve fit and stochastic layout in sequence.
EmbeddingModel umap_fit(const windows::DataMatrix& data, const UmapParams& params);
EmbeddingModel umap_fit(const windows::WindowDataset& dataset, const UmapParams& params);

/// Places new points against the frozen training layout: membership-weighted mean of
/// their training neighbors (exact duplicates take the mean of the duplicates only),
/// then `epochs` refinement passes at a quarter of the fit learning rate.
Coordinates umap_transform(const EmbeddingModel& model, const windows::DataMatrix& data,
                           std::size_t epochs = kTransformEpochs);

/// embedding.json + embedding.f32 + windows.index.csv
void save_model(const EmbeddingModel& model, const std::filesystem::path& directory);

/// Loads coordinates and provenance. The training matrix is loaded too when the
/// recorded dataset directory still exists (needed only by umap_transform).
EmbeddingModel load_model(const std::filesystem::path& directory);

} // namespace ethomap::embed
