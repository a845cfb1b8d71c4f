#include "ethomap/explore/ensemble.hpp"

#include "ethomap/error.hpp"
#include "ethomap/ingest.hpp"
#include "ethomap/parallel.hpp"
#include "ethomap/spotlight.hpp"
#include "ethomap/util.hpp"

#include <algorithm>
#include <cstdint>

namespace ethomap::explore {

DirectoryFrameSource::DirectoryFrameSource(std::filesystem::path root, std::map<std::string, SegmentOrigin> origins)
    : root_(std::move(root)), origins_(std::move(origins)) {}

std::map<std::string, SegmentOrigin> DirectoryFrameSource::origins_from_segments(
    const std::filesystem::path& segments_jsonl) {
    std::map<std::string, SegmentOrigin> origins;
    for (const auto& segment : spotlight::parse_segments(util::read_file(segments_jsonl))) {
        origins[spotlight::segment_video_id(segment)] = {segment.video_id, segment.start_frame};
    }
    return origins;
}

std::optional<std::filesystem::path> DirectoryFrameSource::locate(const std::string& video_id,
                                                                  std::int64_t frame) const {
    const auto origin = origins_.find(video_id);
    if (origin != origins_.end()) {
        return ingest::frame_path(root_ / origin->second.source_video, origin->second.first_frame + frame);
    }
    return ingest::frame_path(root_ / video_id, frame);
}

bool DirectoryFrameSource::has(const std::string& video_id, std::int64_t frame) const {
    return frame >= 0 && locate(video_id, frame).has_value();
}

GrayImage DirectoryFrameSource::load(const std::string& video_id, std::int64_t frame) const {
    const auto path = frame >= 0 ? locate(video_id, frame) : std::nullopt;
    if (!path) {
        throw Error("no frame " + std::to_string(frame) + " for video " + video_id);
    }
    return read_image(*path);
}

bool MemoryFrameSource::has(const std::string& video_id, std::int64_t frame) const {
    const auto it = videos.find(video_id);
    return it != videos.end() && frame >= 0 && static_cast<std::size_t>(frame) < it->second.size();
}

GrayImage MemoryFrameSource::load(const std::string& video_id, std::int64_t frame) const {
    if (!has(video_id, frame)) {
        throw Error("no frame " + std::to_string(frame) + " for video " + video_id);
    }
    return videos.at(video_id)[static_cast<std::size_t>(frame)];
}

EnsembleClip ensemble(const std::vector<windows::WindowRef>& windows, const FrameSource& frames,
                      const EnsembleOptions& options) {
    options.canny.validate();
    if (options.omega == 0) {
        throw ValidationError("omega must be at least 1");
    }
    EnsembleClip clip;
    clip.canny = options.canny;

    // Every (video, frame) needed, with the offsets that use it and how often.
    std::map<std::pair<std::string, std::int64_t>, std::map<std::size_t, std::uint32_t>> uses;
    for (const auto& w : windows) {
        bool complete = true;
        for (std::size_t t = 0; t < options.omega && complete; ++t) {
            complete = frames.has(w.video_id, static_cast<std::int64_t>(w.start_frame + t));
        }
        if (!complete) {
            ++clip.skipped;
            clip.warnings.push_back("skipped window " + w.video_id + "@" + std::to_string(w.start_frame) +
                                    ": frames missing");
            continue;
        }
        ++clip.window_count;
        for (std::size_t t = 0; t < options.omega; ++t) {
            ++uses[{w.video_id, static_cast<std::int64_t>(w.start_frame + t)}][t];
        }
    }
    if (clip.window_count == 0) {
        throw Error("no usable windows: every selected window is missing frames");
    }

    std::vector<std::pair<std::string, std::int64_t>> unique;
    unique.reserve(uses.size());
    for (const auto& [key, offsets] : uses) {
        unique.push_back(key);
    }

    int width = -1;
    int height = -1;
    std::vector<std::vector<std::uint32_t>> counts(options.omega);
    const std::size_t batch = std::max<std::size_t>(16, 4 * std::max(1u, options.threads));
    std::vector<EdgeMap> maps(batch);
    for (std::size_t begin = 0; begin < unique.size(); begin += batch) {
        const std::size_t end = std::min(unique.size(), begin + batch);
        util::parallel_for(end - begin, options.threads, [&](std::size_t i) {
            const auto& [video, frame] = unique[begin + i];
            maps[i] = canny(frames.load(video, frame), options.canny);
        });
        for (std::size_t i = 0; i < end - begin; ++i) {
            const EdgeMap& map = maps[i];
            if (width < 0) {
                width = map.width;
                height = map.height;
                for (auto& c : counts) {
                    c.assign(map.values.size(), 0);
                }
            } else if (map.width != width || map.height != height) {
                throw Error("frame " + std::to_string(unique[begin + i].second) + " of " + unique[begin + i].first +
                            " has different dimensions");
            }
            for (const auto& [t, multiplicity] : uses[unique[begin + i]]) {
                auto& c = counts[t];
                for (std::size_t p = 0; p < map.values.size(); ++p) {
                    if (map.values[p] > 0.0) {
                        c[p] += multiplicity;
                    }
                }
            }
        }
        if (options.progress) {
            options.progress(end, unique.size());
        }
    }

    // Counts are integers, so the mean and the max-normalization below are exact
    // whenever the ratios are representable (halves, quarters, ...).
    std::uint32_t max_count = 0;
    for (const auto& c : counts) {
        for (std::uint32_t v : c) {
            max_count = std::max(max_count, v);
        }
    }
    clip.frames.reserve(options.omega);
    for (const auto& c : counts) {
        EdgeMap map(width, height);
        if (max_count > 0) {
            for (std::size_t p = 0; p < c.size(); ++p) {
                map.values[p] = static_cast<double>(c[p]) / static_cast<double>(max_count);
            }
        }
        clip.frames.push_back(std::move(map));
    }
    return clip;
}

void export_clip(const EnsembleClip& clip, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    for (std::size_t t = 0; t < clip.frames.size(); ++t) {
        write_png(directory / (ingest::frame_file_stem(static_cast<std::int64_t>(t)) + ".png"), to_image(clip.frames[t]));
    }
    nlohmann::ordered_json meta;
    meta["frames"] = clip.frames.size();
    meta["width"] = clip.frames.empty() ? 0 : clip.frames.front().width;
    meta["height"] = clip.frames.empty() ? 0 : clip.frames.front().height;
    meta["window_count"] = clip.window_count;
    meta["skipped"] = clip.skipped;
    meta["region"] = clip.region ? region_to_json(*clip.region) : nlohmann::ordered_json();
    meta["canny"] = {{"low", clip.canny.low}, {"high", clip.canny.high}, {"sigma", clip.canny.sigma}};
    util::write_file_atomic(directory / "clip.json", meta.dump(2) + "\n");
}

} // namespace ethomap::explore
