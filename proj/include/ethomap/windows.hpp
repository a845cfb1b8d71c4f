#pragma once

#include "ethomap/series.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ethomap::windows {

struct BehaviorWindow {
    std::size_t window_id = 0;
    std::string video_id;
    std::size_t start_frame = 0;
    // omega * 2f values, frame-major: frame 0's [x1, y1, ..., xf, yf], then frame 1, ...
    std::vector<double> vector;
};

struct WindowRef {
    std::string video_id;
    std::size_t start_frame = 0;

    friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

/// Row-major float matrix.
struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;

    DataMatrix() = default;
    DataMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

    std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    float& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;
};

struct WindowDataset {
    DataMatrix matrix;
    std::vector<WindowRef> index;  // row i -> provenance; window_id == row
    std::size_t omega = 60;
    std::size_t stride = 1;
    std::vector<std::string> bodyparts;

    std::size_t size() const { return matrix.rows; }
};

/// max(0, floor((n - omega) / stride) + 1).
std::size_t window_count(std::size_t frames, std::size_t omega, std::size_t stride);

std::vector<BehaviorWindow> make_windows(const series::CleanSeries& series, std::size_t omega = 60,
                                         std::size_t stride = 1);

/// Concatenates windows of every video in order; with a cap below the total, keeps
/// a seeded uniform subset (without replacement) in original order.
WindowDataset build_dataset(const std::vector<series::CleanSeries>& videos, std::size_t omega, std::size_t stride,
                            std::optional<std::size_t> cap = std::nullopt, std::uint64_t seed = 0);

/// windows.f32 + windows.index.csv + windows.meta.json
void save_dataset(const WindowDataset& dataset, const std::filesystem::path& directory);
WindowDataset load_dataset(const std::filesystem::path& directory);

std::string index_to_csv(const std::vector<WindowRef>& index);
std::vector<WindowRef> index_from_csv(std::string_view text);

} // namespace ethomap::windows
