#pragma once

#include "ethomap/explore/canny.hpp"
#include "ethomap/explore/region.hpp"
#include "ethomap/image.hpp"
#include "ethomap/windows.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ethomap::explore {

/// Full camera frames by (video id, frame index).
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual bool has(const std::string& video_id, std::int64_t frame) const = 0;
    virtual GrayImage load(const std::string& video_id, std::int64_t frame) const = 0;
};

/// Where a spotlight video's frame 0 sits in its source recording.
struct SegmentOrigin {
    std::string source_video;
    std::int64_t first_frame = 0;
};

/// `<root>/<video>/%06d.png` (or .pgm). Window video ids listed in `origins` are
/// redirected to their source recording with the segment's frame offset.
class DirectoryFrameSource : public FrameSource {
public:
    explicit DirectoryFrameSource(std::filesystem::path root, std::map<std::string, SegmentOrigin> origins = {});

    /// Origins from a segments JSONL file (ids as spotlight::segment_video_id).
    static std::map<std::string, SegmentOrigin> origins_from_segments(const std::filesystem::path& segments_jsonl);

    bool has(const std::string& video_id, std::int64_t frame) const override;
    GrayImage load(const std::string& video_id, std::int64_t frame) const override;

private:
    std::optional<std::filesystem::path> locate(const std::string& video_id, std::int64_t frame) const;

    std::filesystem::path root_;
    std::map<std::string, SegmentOrigin> origins_;
};

class MemoryFrameSource : public FrameSource {
public:
    std::map<std::string, std::vector<GrayImage>> videos;

    bool has(const std::string& video_id, std::int64_t frame) const override;
    GrayImage load(const std::string& video_id, std::int64_t frame) const override;
};

struct EnsembleOptions {
    std::size_t omega = 60;
    CannyParams canny;
    unsigned threads = 1;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct EnsembleClip {
    std::vector<EdgeMap> frames;  // one per window offset
    std::size_t window_count = 0;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
    CannyParams canny;
    std::optional<Region> region;
};

/// Per offset t, the mean over windows of canny(frame(start + t)); the whole clip is
/// then divided by its global maximum. Windows with any frame missing are skipped.
EnsembleClip ensemble(const std::vector<windows::WindowRef>& windows, const FrameSource& frames,
                      const EnsembleOptions& options);

/// 000000.png ... one per offset, plus clip.json.
void export_clip(const EnsembleClip& clip, const std::filesystem::path& directory);

} // namespace ethomap::explore
