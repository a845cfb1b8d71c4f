#pragma once

#include "ethomap/ingest.hpp"
#include "ethomap/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ethomap::spotlight {

struct FrameBounds {
    double width = 1280.0;
    double height = 720.0;
};

struct SpotlightConfig {
    double confidence_threshold = 0.75;
    double grace_delta = 50.0;   // pixels added to every box edge
    double epsilon = 50.0;       // max center displacement between consecutive frames
    std::int64_t min_frames = 50;
    FrameBounds frame_bounds;

    void validate() const;
};

/// Axis-aligned rectangle [x0,x1]×[y0,y1] in frame pixels.
using Rect = std::array<double, 4>;

struct SpotlightSegment {
    std::string video_id;
    std::int64_t track_id = 0;
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    std::vector<Rect> crops;
    std::vector<Point2> centers;
    // Index of the member box within its frame's (filtered) box list.
    std::vector<std::size_t> box_indices;

    std::int64_t length() const { return end_frame - start_frame + 1; }

    friend bool operator==(const SpotlightSegment&, const SpotlightSegment&) = default;
};

/// Keeps boxes with confidence >= threshold; emptied frames are retained.
ingest::FrameDetectionSeries filter_confident(const ingest::FrameDetectionSeries& series, double threshold);

/// Pairs (i, j), i < j, whose delta-expanded rectangles overlap with positive area.
std::vector<std::pair<std::size_t, std::size_t>> find_collisions(const std::vector<ingest::BoundingBox>& boxes,
                                                                 double grace_delta);

/// Greedy nearest-center association with collision termination. Crops in the
/// returned tracks are the raw boxes; extract_segments expands and clamps them.
std::vector<SpotlightSegment> associate_tracks(const ingest::FrameDetectionSeries& confident, double epsilon,
                                               double grace_delta);

std::vector<SpotlightSegment> extract_segments(const std::vector<SpotlightSegment>& tracks, std::int64_t min_frames,
                                               FrameBounds bounds, double grace_delta);

/// filter_confident → associate_tracks → extract_segments.
std::vector<SpotlightSegment> run(const ingest::FrameDetectionSeries& series, const SpotlightConfig& config);

struct LengthHistogram {
    double bin_seconds = 1.0;
    std::vector<std::size_t> counts;  // counts[i]: duration in [i, i+1) * bin_seconds
    std::size_t at_least_8s = 0;
    std::size_t total = 0;
};

LengthHistogram length_histogram(const std::vector<SpotlightSegment>& segments, double fps, double bin_seconds);

/// One JSON object per line: video_id, track_id, start, end, crops.
std::string serialize_segments(const std::vector<SpotlightSegment>& segments);

/// Parses segments JSONL back. Centers and box indices are not stored and come back empty.
std::vector<SpotlightSegment> parse_segments(std::string_view text);

/// Conventional id of the spotlight video cut from a segment.
std::string segment_video_id(const SpotlightSegment& segment);

} // namespace ethomap::spotlight
