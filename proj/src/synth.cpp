#include "ethomap/synth.hpp"

#include "ethomap/error.hpp"
#include "ethomap/spotlight.hpp"
#include "ethomap/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace ethomap::synth {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double round_to(double v, double step) {
    return std::round(v / step) * step;
}

void write_matrix_dataset(const LabeledMatrix& set, const std::string& prefix, const std::filesystem::path& dir) {
    windows::WindowDataset dataset;
    dataset.matrix = set.data;
    dataset.omega = 1;
    dataset.stride = 1;
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        dataset.index.push_back({prefix + std::to_string(set.labels[i]), i});
    }
    windows::save_dataset(dataset, dir);
}

} // namespace

BlobSet make_blobs(std::size_t per_blob, std::size_t holdout_per_blob, std::size_t dims, double sigma,
                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> centers;
    // Centers ~ N(0, 3^2 I); in 120 dimensions their spacing is ~46, far above 10.
    while (centers.size() < 3) {
        std::vector<double> c(dims);
        for (double& v : c) {
            v = 3.0 * normal(rng);
        }
        bool far = true;
        for (const auto& other : centers) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dims; ++k) {
                d2 += (c[k] - other[k]) * (c[k] - other[k]);
            }
            far = far && std::sqrt(d2) >= 10.0;
        }
        if (far) {
            centers.push_back(std::move(c));
        }
    }
    auto draw = [&](std::size_t per) {
        LabeledMatrix set;
        set.data = windows::DataMatrix(3 * per, dims);
        for (std::size_t i = 0; i < 3 * per; ++i) {
            const int label = static_cast<int>(i % 3);
            set.labels.push_back(label);
            for (std::size_t k = 0; k < dims; ++k) {
                set.data.at(i, k) = static_cast<float>(centers[label][k] + sigma * normal(rng));
            }
        }
        return set;
    };
    BlobSet blobs;
    blobs.train = draw(per_blob);
    blobs.holdout = draw(holdout_per_blob);
    return blobs;
}

LabeledMatrix make_rings(std::size_t per_ring, std::size_t dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, kTau);
    std::vector<double> lift(2 * dims);
    for (double& v : lift) {
        v = normal(rng);
    }
    LabeledMatrix set;
    set.data = windows::DataMatrix(2 * per_ring, dims);
    for (std::size_t i = 0; i < 2 * per_ring; ++i) {
        const int label = i < per_ring ? 0 : 1;
        const double radius = label == 0 ? 1.0 : 3.0;
        const double theta = angle(rng);
        const double x = radius * std::cos(theta) + 0.05 * normal(rng);
        const double y = radius * std::sin(theta) + 0.05 * normal(rng);
        set.labels.push_back(label);
        for (std::size_t k = 0; k < dims; ++k) {
            const double warp = 0.3 * std::sin(x * static_cast<double>(1 + k % 3) + y);
            set.data.at(i, k) = static_cast<float>(lift[k] * x + lift[dims + k] * y + warp);
        }
    }
    return set;
}

SpikeTrack make_spike_track(std::size_t frames, std::size_t spikes, double magnitude, double noise,
                            std::uint64_t seed) {
    if (frames < 200 || spikes * 80 > frames) {
        throw ValidationError("spike-track needs at least 200 frames and 80 frames per spike");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, kTau);

    SpikeTrack track;
    // Slowly turning walk at about 1 px/frame.
    double heading = angle(rng);
    Point2 p{320.0, 240.0};
    for (std::size_t t = 0; t < frames; ++t) {
        heading += 0.05 * normal(rng);
        p.x += std::cos(heading);
        p.y += std::sin(heading);
        track.path.push_back(p);
    }

    // Spikes spread over the track, one per block, away from block edges.
    const std::size_t block = frames / spikes;
    std::uniform_int_distribution<std::size_t> jitter(20, block - 20);
    for (std::size_t s = 0; s < spikes; ++s) {
        track.spike_frames.push_back(s * block + jitter(rng));
    }
    auto near_spike = [&](std::size_t t, std::size_t margin) {
        return std::any_of(track.spike_frames.begin(), track.spike_frames.end(), [&](std::size_t s) {
            return (t > s ? t - s : s - t) < margin;
        });
    };
    std::set<std::size_t> gaps;
    std::uniform_int_distribution<std::size_t> gap_start(1, frames - 12);
    std::uniform_int_distribution<std::size_t> gap_length(2, 8);
    for (int attempts = 0; gaps.size() < 40 && attempts < 1000; ++attempts) {
        const std::size_t start = gap_start(rng);
        const std::size_t length = gap_length(rng);
        bool ok = true;
        for (std::size_t t = start; t < start + length + 1; ++t) {
            ok = ok && !near_spike(t, 30) && !gaps.count(t) && !gaps.count(t + 1) && !(t > 0 && gaps.count(t - 1));
        }
        if (ok) {
            for (std::size_t t = start; t < start + length; ++t) {
                gaps.insert(t);
            }
        }
    }
    track.gap_frames.assign(gaps.begin(), gaps.end());

    track.observed.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        Point2 q{track.path[t].x + noise * normal(rng), track.path[t].y + noise * normal(rng)};
        if (std::binary_search(track.spike_frames.begin(), track.spike_frames.end(), t)) {
            const double a = angle(rng);
            q.x += magnitude * std::cos(a);
            q.y += magnitude * std::sin(a);
        }
        if (!gaps.count(t)) {
            track.observed[t] = Point2{round_to(q.x, 1e-3), round_to(q.y, 1e-3)};
        }
    }
    return track;
}

CrossingScenario make_crossing_boxes() {
    CrossingScenario scenario;
    auto& det = scenario.detections;
    det.video_id = "crossing";
    det.fps = 25.0;
    det.width = 1280;
    det.height = 720;
    auto box = [](double cx, double cy, double confidence) {
        return ingest::BoundingBox{cx - 20.0, cy - 20.0, cx + 20.0, cy + 20.0, confidence};
    };
    for (std::int64_t t = 0; t < 120; ++t) {
        // Center distance of A and B: 235 closing by 10/frame, held at 125 for one
        // frame, then opening by 10/frame up to 400. Grace rectangles are 140 wide,
        // so they overlap exactly while the distance is below 140: frames 10-13.
        double d = 0.0;
        if (t <= 11) {
            d = 235.0 - 10.0 * static_cast<double>(t);
        } else if (t == 12) {
            d = 125.0;
        } else {
            d = std::min(400.0, 125.0 + 10.0 * static_cast<double>(t - 12));
        }
        const double wobble = d >= 400.0 ? 2.0 * std::sin(0.7 * static_cast<double>(t)) : 0.0;
        ingest::FrameDetections frame;
        frame.frame = t;
        frame.boxes.push_back(box(640.0 - d / 2.0 + wobble, 300.0, 0.95));
        const bool b_visible = t < 63 || t >= 70;
        if (b_visible) {
            frame.boxes.push_back(box(640.0 + d / 2.0 - wobble, 300.0, 0.93));
        }
        frame.boxes.push_back(box(1000.0 + 3.0 * std::sin(0.3 * static_cast<double>(t)),
                                  500.0 + 3.0 * std::cos(0.3 * static_cast<double>(t)), 0.9));
        if (t >= 30 && t < 40) {
            // Would collide with A if it passed the confidence filter.
            frame.boxes.push_back(box(640.0 - d / 2.0 + 60.0, 340.0, 0.5));
        }
        det.frames.push_back(std::move(frame));
        if (d < 140.0) {
            scenario.collision_frames.push_back(t);
        }
    }
    scenario.expected = {{2, 0, 119}, {3, 14, 119}, {5, 70, 119}};
    scenario.dropped = {{0, 0, 9}, {1, 0, 9}, {4, 14, 62}};
    return scenario;
}

namespace {

constexpr std::size_t kParts = 5;
const std::vector<std::string> kPartNames{"leftear", "rightear", "snout", "lefthand", "righthand"};

// Offsets of the five parts from the body center for a mode at time t.
std::array<Point2, kParts> posture(int mode, double t) {
    switch (mode) {
    case 0: {  // hands circling at the snout
        const double s = std::sin(kTau * t / 10.0);
        const double c = std::cos(kTau * t / 10.0);
        return {{{-8.0, -10.0}, {8.0, -10.0}, {0.0, -18.0}, {-5.0 + 3.0 * c, -12.0 + 6.0 * s},
                 {5.0 - 3.0 * c, -12.0 + 6.0 * s}}};
    }
    case 1: {  // stretched upright, bobbing slowly
        const double s = std::sin(kTau * t / 30.0);
        return {{{-7.0, -22.0 + 6.0 * s}, {7.0, -22.0 + 6.0 * s}, {0.0, -32.0 + 8.0 * s}, {-10.0, -5.0 + 2.0 * s},
                 {10.0, -5.0 + 2.0 * s}}};
    }
    default: {  // alternating hands, head sway
        const double s = std::sin(kTau * t / 16.0);
        const double sway = 5.0 * std::sin(kTau * t / 24.0);
        return {{{-9.0 + 0.5 * sway, -6.0}, {9.0 + 0.5 * sway, -6.0}, {sway, -14.0}, {-12.0, 10.0 + 7.0 * s},
                 {12.0, 10.0 - 7.0 * s}}};
    }
    }
}

} // namespace

BehaviorCorpus make_behavior_modes(const SynthOptions& options) {
    if (options.videos < 2 || options.frames_per_video < 120) {
        throw ValidationError("behavior-modes needs at least 2 videos of 120 frames");
    }
    BehaviorCorpus corpus;
    corpus.width = 480;
    corpus.height = 360;
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t v = 0; v < options.videos; ++v) {
        BehaviorVideo video;
        char name[32];
        std::snprintf(name, sizeof name, "cage%02zu", v + 1);
        video.source = name;
        video.poor = v + 1 == options.videos;
        const std::size_t n = options.frames_per_video;

        // Mode schedule: runs of 90-160 frames, never repeating a mode back to back.
        std::vector<int> labels;
        int mode = static_cast<int>(rng() % 3);
        while (labels.size() < n) {
            const std::size_t length = 90 + rng() % 71;
            for (std::size_t i = 0; i < length && labels.size() < n; ++i) {
                labels.push_back(mode);
            }
            mode = (mode + 1 + static_cast<int>(rng() % 2)) % 3;
        }
        video.labels = labels;

        // Body center wanders slowly inside [110, 230] x [120, 240].
        Point2 body{170.0, 180.0};
        Point2 velocity{0.0, 0.0};
        const double phase = 100.0 * unit(rng);
        video.detections.video_id = video.source;
        video.detections.fps = 25.0;
        video.detections.width = corpus.width;
        video.detections.height = corpus.height;
        video.pose.video_id = video.source + "_t0";
        video.pose.scorer = "synthetic";
        video.pose.bodyparts = kPartNames;

        std::size_t segment_start = 0;
        std::size_t dropout_left[kParts] = {};
        for (std::size_t t = 0; t < n; ++t) {
            velocity.x = 0.9 * velocity.x + 0.15 * normal(rng);
            velocity.y = 0.9 * velocity.y + 0.15 * normal(rng);
            body.x += velocity.x;
            body.y += velocity.y;
            if (body.x < 110.0 || body.x > 230.0) {
                velocity.x = -velocity.x;
                body.x = std::clamp(body.x, 110.0, 230.0);
            }
            if (body.y < 120.0 || body.y > 240.0) {
                velocity.y = -velocity.y;
                body.y = std::clamp(body.y, 120.0, 240.0);
            }
            video.body.push_back(body);

            ingest::FrameDetections frame;
            frame.frame = static_cast<std::int64_t>(t);
            const ingest::BoundingBox subject{round_to(body.x - 30.0, 0.01), round_to(body.y - 30.0, 0.01),
                                              round_to(body.x + 30.0, 0.01), round_to(body.y + 30.0, 0.01),
                                              round_to(0.8 + 0.19 * unit(rng), 0.001)};
            frame.boxes.push_back(subject);
            if (v == 1 && t >= 200 && t < 230) {
                // A second animal passes the far corner briefly: a fragment below min length.
                frame.boxes.push_back({405.0, 40.0 + static_cast<double>(t - 200), 435.0,
                                       70.0 + static_cast<double>(t - 200), 0.9});
            }
            if (unit(rng) < 0.05) {
                frame.boxes.push_back({380.0, 250.0, 420.0, 290.0, round_to(0.1 + 0.5 * unit(rng), 0.001)});
            }
            video.detections.frames.push_back(std::move(frame));

            // Pose in crop coordinates: crop = subject box grown by the default grace of 50.
            if (t > 0 && labels[t] != labels[t - 1]) {
                segment_start = t;
            }
            const auto target = posture(labels[t], static_cast<double>(t) + phase);
            std::array<Point2, kParts> offsets = target;
            const std::size_t since = t - segment_start;
            if (segment_start > 0 && since < 10) {
                const auto previous = posture(labels[segment_start - 1], static_cast<double>(t) + phase);
                const double w = static_cast<double>(since + 1) / 11.0;
                for (std::size_t p = 0; p < kParts; ++p) {
                    offsets[p] = {w * target[p].x + (1.0 - w) * previous[p].x,
                                  w * target[p].y + (1.0 - w) * previous[p].y};
                }
            }
            const double crop_x = std::max(0.0, subject.x0 - 50.0);
            const double crop_y = std::max(0.0, subject.y0 - 50.0);
            video.pose.frame_numbers.push_back(static_cast<std::int64_t>(t));
            for (std::size_t p = 0; p < kParts; ++p) {
                double x = body.x + offsets[p].x + 0.7 * normal(rng) - crop_x;
                double y = body.y + offsets[p].y + 0.7 * normal(rng) - crop_y;
                double likelihood = 0.85 + 0.15 * unit(rng);
                if (video.poor) {
                    likelihood = p < 2 ? 0.3 + 0.4 * unit(rng) : 0.05 + 0.3 * unit(rng);
                }
                if (dropout_left[p] == 0 && unit(rng) < 0.01) {
                    dropout_left[p] = 1 + rng() % 5;
                }
                if (dropout_left[p] > 0) {
                    --dropout_left[p];
                    likelihood = 0.05 + 0.35 * unit(rng);
                }
                if (unit(rng) < 0.002) {
                    // Tracking glitch: a confident but far-off position.
                    const double a = kTau * unit(rng);
                    x += 35.0 * std::cos(a);
                    y += 35.0 * std::sin(a);
                }
                if (unit(rng) < 0.001) {
                    video.pose.samples.push_back(std::nullopt);
                } else {
                    video.pose.samples.push_back(
                        ingest::Keypoint{round_to(x, 1e-3), round_to(y, 1e-3), round_to(likelihood, 1e-4)});
                }
            }
        }
        video.spotlight_id = video.pose.video_id;
        corpus.videos.push_back(std::move(video));
    }
    return corpus;
}

GrayImage render_frame(const BehaviorCorpus& corpus, const BehaviorVideo& video, std::size_t frame) {
    GrayImage image(corpus.width, corpus.height, 40);
    auto fill_rect = [&](int x0, int y0, int x1, int y1, std::uint8_t value) {
        for (int y = std::max(0, y0); y < std::min(image.height, y1); ++y) {
            for (int x = std::max(0, x0); x < std::min(image.width, x1); ++x) {
                image.at(x, y) = value;
            }
        }
    };
    auto fill_disc = [&](double cx, double cy, double r, std::uint8_t value) {
        for (int y = static_cast<int>(cy - r) - 1; y <= static_cast<int>(cy + r) + 1; ++y) {
            for (int x = static_cast<int>(cx - r) - 1; x <= static_cast<int>(cx + r) + 1; ++x) {
                if (x >= 0 && y >= 0 && x < image.width && y < image.height &&
                    std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) {
                    image.at(x, y) = value;
                }
            }
        }
    };
    // Static furniture: a tunnel and a feeder bar.
    fill_rect(330, 30, 460, 90, 200);
    fill_rect(20, 40, 26, 320, 180);

    const Point2 body = video.body[frame];
    fill_disc(body.x, body.y, 16.0, 120);
    const auto& det = video.detections.frames[frame].boxes.front();
    const double crop_x = std::max(0.0, det.x0 - 50.0);
    const double crop_y = std::max(0.0, det.y0 - 50.0);
    for (std::size_t p = 0; p < video.pose.part_count(); ++p) {
        const auto& sample = video.pose.at(frame, p);
        if (sample) {
            fill_disc(sample->x + crop_x, sample->y + crop_y, 3.0, 235);
        }
    }
    return image;
}

namespace {

void write_truth(const std::filesystem::path& out, const nlohmann::ordered_json& truth) {
    util::write_file_atomic(out / "truth.json", truth.dump(2) + "\n");
}

nlohmann::ordered_json segment_json(const std::vector<ExpectedSegment>& segments) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& s : segments) {
        list.push_back({{"track_id", s.track_id}, {"start", s.start}, {"end", s.end}});
    }
    return list;
}

} // namespace

void generate(const std::string& profile, const SynthOptions& options, const std::filesystem::path& out) {
    if (std::find(kProfiles.begin(), kProfiles.end(), profile) == kProfiles.end()) {
        throw ValidationError("unknown synth profile: " + profile);
    }
    std::filesystem::create_directories(out);
    nlohmann::ordered_json truth;
    truth["profile"] = profile;
    truth["seed"] = options.seed;

    if (profile == "blobs") {
        const auto blobs = make_blobs(300, 100, 120, 0.1, options.seed);
        write_matrix_dataset(blobs.train, "blob", out / "windows");
        write_matrix_dataset(blobs.holdout, "blob", out / "holdout");
        truth["train_labels"] = blobs.train.labels;
        truth["holdout_labels"] = blobs.holdout.labels;
    } else if (profile == "rings") {
        const auto rings = make_rings(300, 120, options.seed);
        write_matrix_dataset(rings, "ring", out / "windows");
        truth["train_labels"] = rings.labels;
    } else if (profile == "spike-track") {
        const auto track = make_spike_track(2000, options.spikes, 50.0, 1.0, options.seed);
        ingest::PoseSeries pose;
        pose.video_id = "spike";
        pose.scorer = "synthetic";
        pose.bodyparts = {"snout"};
        for (std::size_t t = 0; t < track.observed.size(); ++t) {
            pose.frame_numbers.push_back(static_cast<std::int64_t>(t));
            if (track.observed[t]) {
                pose.samples.push_back(ingest::Keypoint{track.observed[t]->x, track.observed[t]->y, 1.0});
            } else {
                pose.samples.push_back(std::nullopt);
            }
        }
        util::write_file_atomic(out / "poses" / "spike.csv", ingest::serialize_pose_csv(pose));
        truth["frames"] = track.observed.size();
        truth["magnitude"] = 50.0;
        truth["noise"] = 1.0;
        truth["spike_frames"] = track.spike_frames;
        truth["gap_frames"] = track.gap_frames;
    } else if (profile == "crossing-boxes") {
        const auto scenario = make_crossing_boxes();
        util::write_file_atomic(out / "detections" / "crossing.jsonl",
                                ingest::serialize_detections(scenario.detections));
        truth["collision_frames"] = scenario.collision_frames;
        truth["expected_segments"] = segment_json(scenario.expected);
        truth["dropped_fragments"] = segment_json(scenario.dropped);
    } else {
        const auto corpus = make_behavior_modes(options);
        nlohmann::ordered_json videos = nlohmann::ordered_json::object();
        for (const auto& video : corpus.videos) {
            util::write_file_atomic(out / "detections" / (video.source + ".jsonl"),
                                    ingest::serialize_detections(video.detections));
            util::write_file_atomic(out / "poses" / (video.spotlight_id + ".csv"),
                                    ingest::serialize_pose_csv(video.pose));
            auto runs = nlohmann::ordered_json::array();
            for (std::size_t t = 0; t < video.labels.size(); ++t) {
                if (t == 0 || video.labels[t] != video.labels[t - 1]) {
                    runs.push_back({{"mode", video.labels[t]}, {"start", t}, {"end", t}});
                } else {
                    runs.back()["end"] = t;
                }
            }
            videos[video.spotlight_id] = {{"source", video.source},
                                          {"poor", video.poor},
                                          {"labels", video.labels},
                                          {"segments", runs}};
            if (options.frames) {
                for (std::size_t t = 0; t < video.labels.size(); ++t) {
                    write_png(out / "frames" / video.source /
                                  (ingest::frame_file_stem(static_cast<std::int64_t>(t)) + ".png"),
                              render_frame(corpus, video, t));
                }
            }
        }
        truth["modes"] = kModeNames;
        truth["width"] = corpus.width;
        truth["height"] = corpus.height;
        truth["videos"] = videos;
    }
    write_truth(out, truth);
}

} // namespace ethomap::synth
