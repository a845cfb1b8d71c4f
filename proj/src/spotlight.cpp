#include "ethomap/spotlight.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace ethomap::spotlight {

void SpotlightConfig::validate() const {
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
        throw ValidationError("confidence threshold must lie in [0,1]");
    }
    if (!(grace_delta >= 0.0) || !(epsilon >= 0.0)) {
        throw ValidationError("delta and epsilon must be non-negative");
    }
    if (min_frames < 1) {
        throw ValidationError("min_frames must be at least 1");
    }
    if (!(frame_bounds.width > 0.0) || !(frame_bounds.height > 0.0)) {
        throw ValidationError("frame bounds must be positive");
    }
}

ingest::FrameDetectionSeries filter_confident(const ingest::FrameDetectionSeries& series, double threshold) {
    auto out = series;
    for (auto& frame : out.frames) {
        std::erase_if(frame.boxes, [threshold](const auto& b) { return b.confidence < threshold; });
    }
    return out;
}

namespace {

Rect expand(const ingest::BoundingBox& b, double delta) {
    return {b.x0 - delta, b.y0 - delta, b.x1 + delta, b.y1 + delta};
}

bool overlaps(const Rect& a, const Rect& b) {
    const double w = std::min(a[2], b[2]) - std::max(a[0], b[0]);
    const double h = std::min(a[3], b[3]) - std::max(a[1], b[1]);
    return w > 0.0 && h > 0.0;
}

struct ActiveTrack {
    SpotlightSegment segment;
    Point2 last_center;
};

} // namespace

std::vector<std::pair<std::size_t, std::size_t>> find_collisions(const std::vector<ingest::BoundingBox>& boxes,
                                                                 double grace_delta) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Rect a = expand(boxes[i], grace_delta);
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            if (overlaps(a, expand(boxes[j], grace_delta))) {
                pairs.emplace_back(i, j);
            }
        }
    }
    return pairs;
}

std::vector<SpotlightSegment> associate_tracks(const ingest::FrameDetectionSeries& confident, double epsilon,
                                               double grace_delta) {
    std::vector<SpotlightSegment> finished;
    std::vector<ActiveTrack> active;
    std::int64_t next_id = 0;
    std::int64_t previous_frame = std::numeric_limits<std::int64_t>::min();

    auto finish_all = [&] {
        for (auto& t : active) {
            finished.push_back(std::move(t.segment));
        }
        active.clear();
    };

    for (const auto& frame : confident.frames) {
        // Tracks only continue from the immediately preceding frame.
        if (frame.frame != previous_frame + 1) {
            finish_all();
        }
        previous_frame = frame.frame;

        const auto& boxes = frame.boxes;
        std::vector<bool> colliding(boxes.size(), false);
        for (const auto& [i, j] : find_collisions(boxes, grace_delta)) {
            colliding[i] = colliding[j] = true;
        }

        // Greedy one-to-one matching over every box: nearest first, then lower box index, then lower track id.
        std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            const Point2 c{boxes[b].center_x(), boxes[b].center_y()};
            for (std::size_t t = 0; t < active.size(); ++t) {
                const double d = distance(c, active[t].last_center);
                if (d <= epsilon) {
                    candidates.emplace_back(d, b, t);
                }
            }
        }
        std::sort(candidates.begin(), candidates.end(), [&](const auto& l, const auto& r) {
            if (std::get<0>(l) != std::get<0>(r)) {
                return std::get<0>(l) < std::get<0>(r);
            }
            if (std::get<1>(l) != std::get<1>(r)) {
                return std::get<1>(l) < std::get<1>(r);
            }
            return active[std::get<2>(l)].segment.track_id < active[std::get<2>(r)].segment.track_id;
        });

        std::vector<long> track_of_box(boxes.size(), -1);
        std::vector<bool> track_taken(active.size(), false);
        for (const auto& [d, b, t] : candidates) {
            if (track_of_box[b] < 0 && !track_taken[t]) {
                track_of_box[b] = static_cast<long>(t);
                track_taken[t] = true;
            }
        }

        std::vector<ActiveTrack> next;
        std::vector<bool> extended(active.size(), false);
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            if (colliding[b] || track_of_box[b] < 0) {
                continue;
            }
            extended[static_cast<std::size_t>(track_of_box[b])] = true;
        }
        for (std::size_t t = 0; t < active.size(); ++t) {
            if (!extended[t]) {
                // Unmatched, or claimed by a colliding box.
                finished.push_back(std::move(active[t].segment));
            }
        }
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            if (colliding[b]) {
                continue;
            }
            const auto& box = boxes[b];
            const Point2 c{box.center_x(), box.center_y()};
            ActiveTrack track;
            if (track_of_box[b] >= 0) {
                track = std::move(active[static_cast<std::size_t>(track_of_box[b])]);
            } else {
                track.segment.video_id = confident.video_id;
                track.segment.track_id = next_id++;
                track.segment.start_frame = frame.frame;
            }
            track.segment.end_frame = frame.frame;
            track.segment.crops.push_back({box.x0, box.y0, box.x1, box.y1});
            track.segment.centers.push_back(c);
            track.segment.box_indices.push_back(b);
            track.last_center = c;
            next.push_back(std::move(track));
        }
        std::sort(next.begin(), next.end(),
                  [](const auto& l, const auto& r) { return l.segment.track_id < r.segment.track_id; });
        active = std::move(next);
    }
    finish_all();

    std::sort(finished.begin(), finished.end(), [](const auto& l, const auto& r) {
        return std::tie(l.start_frame, l.track_id) < std::tie(r.start_frame, r.track_id);
    });
    return finished;
}

std::vector<SpotlightSegment> extract_segments(const std::vector<SpotlightSegment>& tracks, std::int64_t min_frames,
                                               FrameBounds bounds, double grace_delta) {
    std::vector<SpotlightSegment> out;
    for (const auto& track : tracks) {
        if (track.length() < min_frames) {
            continue;
        }
        auto segment = track;
        for (auto& crop : segment.crops) {
            crop = {std::clamp(crop[0] - grace_delta, 0.0, bounds.width),
                    std::clamp(crop[1] - grace_delta, 0.0, bounds.height),
                    std::clamp(crop[2] + grace_delta, 0.0, bounds.width),
                    std::clamp(crop[3] + grace_delta, 0.0, bounds.height)};
        }
        out.push_back(std::move(segment));
    }
    return out;
}

std::vector<SpotlightSegment> run(const ingest::FrameDetectionSeries& series, const SpotlightConfig& config) {
    config.validate();
    const auto confident = filter_confident(series, config.confidence_threshold);
    const auto tracks = associate_tracks(confident, config.epsilon, config.grace_delta);
    return extract_segments(tracks, config.min_frames, config.frame_bounds, config.grace_delta);
}

LengthHistogram length_histogram(const std::vector<SpotlightSegment>& segments, double fps, double bin_seconds) {
    if (!(fps > 0.0) || !(bin_seconds > 0.0)) {
        throw ValidationError("fps and bin width must be positive");
    }
    LengthHistogram h;
    h.bin_seconds = bin_seconds;
    for (const auto& s : segments) {
        const double seconds = static_cast<double>(s.length()) / fps;
        const auto bin = static_cast<std::size_t>(std::floor(seconds / bin_seconds));
        if (h.counts.size() <= bin) {
            h.counts.resize(bin + 1, 0);
        }
        ++h.counts[bin];
        ++h.total;
        if (seconds >= 8.0) {
            ++h.at_least_8s;
        }
    }
    return h;
}

std::string serialize_segments(const std::vector<SpotlightSegment>& segments) {
    std::string out;
    for (const auto& s : segments) {
        nlohmann::ordered_json line;
        line["video_id"] = s.video_id;
        line["track_id"] = s.track_id;
        line["start"] = s.start_frame;
        line["end"] = s.end_frame;
        line["crops"] = nlohmann::ordered_json::array();
        for (const auto& c : s.crops) {
            line["crops"].push_back({c[0], c[1], c[2], c[3]});
        }
        out += line.dump() + "\n";
    }
    return out;
}

std::vector<SpotlightSegment> parse_segments(std::string_view text) {
    std::vector<SpotlightSegment> out;
    std::size_t number = 0;
    for (auto line : util::split(text, '\n')) {
        ++number;
        if (util::trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            SpotlightSegment s;
            s.video_id = j.at("video_id").get<std::string>();
            s.track_id = j.at("track_id").get<std::int64_t>();
            s.start_frame = j.at("start").get<std::int64_t>();
            s.end_frame = j.at("end").get<std::int64_t>();
            for (const auto& c : j.at("crops")) {
                s.crops.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(),
                                   c.at(3).get<double>()});
            }
            if (static_cast<std::int64_t>(s.crops.size()) != s.length()) {
                throw ValidationError("crop count does not match frame range");
            }
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(number, e.what());
        } catch (const ValidationError& e) {
            throw ParseError(number, e.what());
        }
    }
    return out;
}

std::string segment_video_id(const SpotlightSegment& segment) {
    return segment.video_id + "_t" + std::to_string(segment.track_id);
}

} // namespace ethomap::spotlight
