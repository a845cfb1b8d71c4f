#pragma once

#include "ethomap/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ethomap::ingest {

inline constexpr double kDefaultFps = 25.0;

struct BoundingBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
    double confidence = 0.0;

    double center_x() const { return 0.5 * (x0 + x1); }
    double center_y() const { return 0.5 * (y0 + y1); }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct FrameDetections {
    std::int64_t frame = 0;
    std::vector<BoundingBox> boxes;

    friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

struct FrameDetectionSeries {
    std::string video_id;
    double fps = kDefaultFps;
    // Optional frame size carried in the header line.
    std::optional<int> width;
    std::optional<int> height;
    std::vector<FrameDetections> frames;

    friend bool operator==(const FrameDetectionSeries&, const FrameDetectionSeries&) = default;
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double likelihood = 0.0;

    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// nullopt is MISSING.
using PoseSample = std::optional<Keypoint>;

struct PoseSeries {
    std::string video_id;
    std::string scorer;
    std::vector<std::string> bodyparts;
    std::vector<std::int64_t> frame_numbers;
    // Frame-major: samples[frame * bodyparts.size() + part].
    std::vector<PoseSample> samples;

    std::size_t frame_count() const { return frame_numbers.size(); }
    std::size_t part_count() const { return bodyparts.size(); }
    const PoseSample& at(std::size_t frame, std::size_t part) const {
        return samples[frame * bodyparts.size() + part];
    }
    PoseSample& at(std::size_t frame, std::size_t part) {
        return samples[frame * bodyparts.size() + part];
    }
    /// Index of a bodypart by name; throws ValidationError when absent.
    std::size_t part_index(std::string_view name) const;

    friend bool operator==(const PoseSeries&, const PoseSeries&) = default;
};

struct FrameStack {
    std::string video_id;
    std::vector<GrayImage> frames;
};

/// A skipped record in lenient parsing mode.
struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

template <typename T>
struct Parsed {
    T value;
    std::vector<ParseIssue> issues;
};

void validate(const BoundingBox& box);

/// Strict: throws ParseError carrying the 1-based line number of the first bad record.
FrameDetectionSeries parse_detections(std::string_view text, std::string default_video_id = {});
/// Lenient: bad records are skipped and reported; every input record is either kept or reported.
Parsed<FrameDetectionSeries> parse_detections_lenient(std::string_view text,
                                                      std::string default_video_id = {});
/// Canonical JSONL form: header line then one line per frame.
std::string serialize_detections(const FrameDetectionSeries& series);

PoseSeries parse_pose_csv(std::string_view text, std::string video_id = {});
Parsed<PoseSeries> parse_pose_csv_lenient(std::string_view text, std::string video_id = {});
std::string serialize_pose_csv(const PoseSeries& pose);

FrameDetectionSeries load_detections(const std::filesystem::path& path);
PoseSeries load_pose_csv(const std::filesystem::path& path);

/// Loads `<dir>/%06d.png` (or `.pgm`) for every index in [first, last].
FrameStack load_frames(const std::filesystem::path& directory, std::int64_t first, std::int64_t last);

/// Path of one frame image if it exists (png preferred over pgm).
std::optional<std::filesystem::path> frame_path(const std::filesystem::path& directory, std::int64_t index);
std::string frame_file_stem(std::int64_t index);

} // namespace ethomap::ingest
