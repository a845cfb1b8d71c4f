#pragma once

#include "ethomap/image.hpp"
#include "ethomap/ingest.hpp"
#include "ethomap/types.hpp"
#include "ethomap/windows.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ethomap::synth {

inline const std::vector<std::string> kProfiles{"blobs", "rings", "behavior-modes", "spike-track", "crossing-boxes"};

struct SynthOptions {
    std::uint64_t seed = 7;
    bool frames = false;               // behavior-modes: also render full camera frames
    std::size_t videos = 8;            // behavior-modes: recordings, the last one poorly tracked
    std::size_t frames_per_video = 500;
    std::size_t spikes = 20;           // spike-track
};

/// Writes the profile's corpus plus truth.json under `out`. Unknown profile: ValidationError.
void generate(const std::string& profile, const SynthOptions& options, const std::filesystem::path& out);

struct LabeledMatrix {
    windows::DataMatrix data;
    std::vector<int> labels;
};

struct BlobSet {
    LabeledMatrix train;
    LabeledMatrix holdout;
};

/// Three Gaussian blobs with centers at least 10 apart.
BlobSet make_blobs(std::size_t per_blob, std::size_t holdout_per_blob, std::size_t dims, double sigma,
                   std::uint64_t seed);

/// Two concentric rings (radii 1 and 3) lifted by a fixed random linear map plus a
/// sinusoidal warp. Label 0 is the inner ring.
LabeledMatrix make_rings(std::size_t per_ring, std::size_t dims, std::uint64_t seed);

struct SpikeTrack {
    Track1P observed;            // with spikes and dropout gaps
    std::vector<Point2> path;    // noiseless underlying walk
    std::vector<std::size_t> spike_frames;
    std::vector<std::size_t> gap_frames;
};

/// Smooth walk with gaussian noise, `spikes` isolated jumps of `magnitude` pixels and
/// dropout gaps kept at least 30 frames from any spike.
SpikeTrack make_spike_track(std::size_t frames, std::size_t spikes, double magnitude, double noise,
                            std::uint64_t seed);

struct ExpectedSegment {
    std::int64_t track_id = 0;
    std::int64_t start = 0;
    std::int64_t end = 0;
};

struct CrossingScenario {
    ingest::FrameDetectionSeries detections;
    std::vector<ExpectedSegment> expected;        // at min_frames 50, default config
    std::vector<ExpectedSegment> dropped;         // fragments below min_frames
    std::vector<std::int64_t> collision_frames;
};

/// Two boxes converge until their grace rectangles overlap (frames 10-13) and then
/// separate; a third box stays clear; one box vanishes for 7 frames; a low-confidence
/// distractor sits next to a tracked box.
CrossingScenario make_crossing_boxes();

inline const std::vector<std::string> kModeNames{"grooming", "rearing", "walking"};

struct BehaviorVideo {
    std::string source;          // recording id
    std::string spotlight_id;    // pose table id
    ingest::FrameDetectionSeries detections;
    ingest::PoseSeries pose;
    std::vector<int> labels;     // mode per pose frame
    std::vector<Point2> body;    // subject center in camera frame per frame
    bool poor = false;
};

struct BehaviorCorpus {
    std::vector<BehaviorVideo> videos;
    int width = 320;
    int height = 240;
};

BehaviorCorpus make_behavior_modes(const SynthOptions& options);

/// Camera frame `frame` of `video`: static background plus the subject.
GrayImage render_frame(const BehaviorCorpus& corpus, const BehaviorVideo& video, std::size_t frame);

} // namespace ethomap::synth
