#include "ethomap/pipeline.hpp"

#include "ethomap/embed/pca.hpp"
#include "ethomap/error.hpp"
#include "ethomap/ingest.hpp"
#include "ethomap/parallel.hpp"
#include "ethomap/quality.hpp"
#include "ethomap/util.hpp"
#include "ethomap/windows.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace ethomap::pipeline {

namespace fs = std::filesystem;

void QualityParams::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw ValidationError("tau must lie in [0, 1]");
    }
    if (!(geomean_threshold >= 0.0 && geomean_threshold <= 1.0)) {
        throw ValidationError("geomean threshold must lie in [0, 1], got " + util::format_double(geomean_threshold));
    }
}

void WindowParams::validate() const {
    if (omega < 1 || stride < 1) {
        throw ValidationError("window length and stride must be at least 1");
    }
}

namespace {

const std::vector<std::string>& effective_parts(const QualityParams& params) {
    return params.parts.empty() ? quality::kDefaultParts : params.parts;
}

std::string interpolation_name(series::Interpolation interpolation) {
    return interpolation == series::Interpolation::Cubic ? "cubic" : "linear";
}

void write_json(const fs::path& path, const Json& value) {
    util::write_file_atomic(path, value.dump(2) + "\n");
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(util::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

Json finish(const fs::path& out_dir, Json summary) {
    write_json(out_dir / "summary.json", summary);
    return summary;
}

} // namespace

void PipelineConfig::validate() const {
    spotlight.validate();
    quality.validate();
    windows.validate();
    umap.validate();
    if (!(clean.d_max >= 0.0)) {
        throw ValidationError("dmax must be non-negative");
    }
    if (!(hist_bin_seconds > 0.0)) {
        throw ValidationError("histogram bin width must be positive");
    }
    if (pca_dims < 1) {
        throw ValidationError("pca dims must be at least 1");
    }
    if (detections.empty() || !fs::exists(detections)) {
        throw ValidationError("detections input not found: '" + detections.string() + "'");
    }
    if (poses.empty() || !fs::is_directory(poses)) {
        throw ValidationError("pose directory not found: '" + poses.string() + "'");
    }
    if (out.empty()) {
        throw ValidationError("an output directory is required");
    }
}

Json PipelineConfig::echo() const {
    Json p;
    p["detections"] = detections.string();
    p["poses"] = poses.string();
    p["confidence"] = spotlight.confidence_threshold;
    p["delta"] = spotlight.grace_delta;
    p["epsilon"] = spotlight.epsilon;
    p["min_frames"] = spotlight.min_frames;
    p["width"] = spotlight.frame_bounds.width;
    p["height"] = spotlight.frame_bounds.height;
    p["hist_bin_seconds"] = hist_bin_seconds;
    p["tau"] = quality.tau;
    p["geomean_threshold"] = quality.geomean_threshold;
    p["parts"] = effective_parts(quality);
    p["dmax"] = clean.d_max;
    p["smooth"] = clean.smooth;
    p["interp"] = interpolation_name(clean.interpolation);
    p["normalize"] = clean.normalize;
    p["omega"] = windows.omega;
    p["stride"] = windows.stride;
    p["cap"] = windows.cap;
    p["window_seed"] = windows.seed;
    p["neighbors"] = umap.n_neighbors;
    p["min_dist"] = umap.min_dist;
    p["spread"] = umap.spread;
    p["epochs"] = umap.epochs;
    p["seed"] = umap.seed;
    p["negative_rate"] = umap.negative_rate;
    p["learning_rate"] = umap.learning_rate;
    p["init"] = embed::to_string(umap.init);
    p["sgd_threads"] = umap.threads;
    p["pca_dims"] = pca_dims;
    p["threads"] = threads;
    return p;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    if (!fs::is_directory(dir)) {
        throw Error("not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

Json spotlight_stage(const fs::path& detections, const spotlight::SpotlightConfig& config, double bin_seconds,
                     const fs::path& out_dir, unsigned threads) {
    config.validate();
    const std::vector<fs::path> inputs =
        fs::is_directory(detections) ? list_files(detections, ".jsonl") : std::vector<fs::path>{detections};
    if (inputs.empty()) {
        throw Error("no detection files in " + detections.string());
    }

    struct VideoResult {
        std::vector<spotlight::SpotlightSegment> segments;
        spotlight::LengthHistogram histogram;
        std::size_t frames = 0, boxes = 0, confident = 0, tracks = 0;
    };
    std::vector<VideoResult> results(inputs.size());
    util::parallel_for(inputs.size(), threads, [&](std::size_t v) {
        const auto series = ingest::load_detections(inputs[v]);
        spotlight::FrameBounds bounds = config.frame_bounds;
        if (series.width) {
            bounds.width = *series.width;
        }
        if (series.height) {
            bounds.height = *series.height;
        }
        const auto confident = spotlight::filter_confident(series, config.confidence_threshold);
        const auto tracks = spotlight::associate_tracks(confident, config.epsilon, config.grace_delta);
        auto& r = results[v];
        r.segments = spotlight::extract_segments(tracks, config.min_frames, bounds, config.grace_delta);
        r.histogram = spotlight::length_histogram(r.segments, series.fps, bin_seconds);
        r.frames = series.frames.size();
        r.tracks = tracks.size();
        for (std::size_t f = 0; f < series.frames.size(); ++f) {
            r.boxes += series.frames[f].boxes.size();
            r.confident += confident.frames[f].boxes.size();
        }
    });

    std::vector<spotlight::SpotlightSegment> segments;
    std::vector<std::size_t> counts;
    std::size_t at_least_8s = 0, frames = 0, boxes = 0, confident = 0, tracks = 0, segment_frames = 0;
    for (const auto& r : results) {
        segments.insert(segments.end(), r.segments.begin(), r.segments.end());
        if (counts.size() < r.histogram.counts.size()) {
            counts.resize(r.histogram.counts.size(), 0);
        }
        for (std::size_t b = 0; b < r.histogram.counts.size(); ++b) {
            counts[b] += r.histogram.counts[b];
        }
        at_least_8s += r.histogram.at_least_8s;
        frames += r.frames;
        boxes += r.boxes;
        confident += r.confident;
        tracks += r.tracks;
        for (const auto& s : r.segments) {
            segment_frames += static_cast<std::size_t>(s.length());
        }
    }
    fs::create_directories(out_dir);
    util::write_file_atomic(out_dir / "segments.jsonl", spotlight::serialize_segments(segments));
    Json histogram;
    histogram["bin_seconds"] = bin_seconds;
    histogram["counts"] = counts;
    histogram["at_least_8s"] = at_least_8s;
    histogram["total"] = segments.size();
    write_json(out_dir / "length_histogram.json", histogram);

    Json summary;
    summary["videos"] = inputs.size();
    summary["frames"] = frames;
    summary["boxes"] = boxes;
    summary["confident_boxes"] = confident;
    summary["tracks"] = tracks;
    summary["segments"] = segments.size();
    summary["dropped_tracks"] = tracks - segments.size();
    summary["segment_frames"] = segment_frames;
    summary["at_least_8s"] = at_least_8s;
    return finish(out_dir, summary);
}

Json quality_stage(const fs::path& poses, const std::optional<fs::path>& segments, const QualityParams& params,
                   const fs::path& out_dir, unsigned threads) {
    params.validate();
    const auto& parts = effective_parts(params);
    auto files = list_files(poses, ".csv");
    std::size_t unmatched = 0;
    if (segments) {
        std::set<std::string> ids;
        for (const auto& s : spotlight::parse_segments(util::read_file(*segments))) {
            ids.insert(spotlight::segment_video_id(s));
        }
        const auto total = files.size();
        std::erase_if(files, [&](const fs::path& f) { return !ids.count(f.stem().string()); });
        unmatched = total - files.size();
    }
    std::vector<quality::QualityReport> reports(files.size());
    util::parallel_for(files.size(), threads, [&](std::size_t i) {
        const auto pose = ingest::load_pose_csv(files[i]);
        try {
            reports[i] = quality::assess(pose, parts, params.tau);
        } catch (const ValidationError& e) {
            throw ValidationError(files[i].string() + ": " + e.what());
        }
    });
    const auto selection = quality::select_videos(reports, params.geomean_threshold);

    fs::create_directories(out_dir);
    util::write_file_atomic(out_dir / "quality.csv", quality::reports_to_csv(reports));
    Json sel;
    sel["threshold"] = params.geomean_threshold;
    sel["tau"] = params.tau;
    sel["parts"] = parts;
    sel["selected"] = selection.selected;
    std::vector<std::string> rejected;
    for (const auto& r : reports) {
        if (std::find(selection.selected.begin(), selection.selected.end(), r.video_id) == selection.selected.end()) {
            rejected.push_back(r.video_id);
        }
    }
    sel["rejected"] = rejected;
    sel["tradeoff"] = {{"thresholds", selection.tradeoff.thresholds},
                       {"kept_fraction", selection.tradeoff.kept_fraction},
                       {"mean_missing_fraction", selection.tradeoff.mean_missing_fraction},
                       {"max_missing_fraction", selection.tradeoff.max_missing_fraction}};
    write_json(out_dir / "selection.json", sel);

    Json summary;
    summary["pose_tables"] = files.size() + unmatched;
    summary["unmatched"] = unmatched;
    summary["assessed"] = reports.size();
    summary["selected"] = selection.selected.size();
    summary["rejected"] = rejected.size();
    return finish(out_dir, summary);
}

Json clean_stage(const fs::path& poses, const std::optional<fs::path>& selection,
                 const series::CleanOptions& options, const fs::path& out_dir, unsigned threads) {
    std::vector<fs::path> files;
    if (selection) {
        const auto sel = read_json(*selection);
        for (const auto& id : sel.at("selected")) {
            files.push_back(poses / (id.get<std::string>() + ".csv"));
        }
    } else {
        files = list_files(poses, ".csv");
    }
    std::vector<series::CleanOutcome> outcomes(files.size());
    util::parallel_for(files.size(), threads, [&](std::size_t i) {
        outcomes[i] = series::clean_video(ingest::load_pose_csv(files[i]), options);
    });

    fs::create_directories(out_dir);
    std::vector<Track1P> masked;
    Json rejected = Json::array();
    std::size_t cleaned = 0, observed = 0, removed = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto& o = outcomes[i];
        observed += o.observed_after_mask;
        removed += o.removed_by_smoothing;
        masked.insert(masked.end(), o.masked_tracks.begin(), o.masked_tracks.end());
        if (o.series) {
            ++cleaned;
            util::write_file_atomic(out_dir / (o.series->video_id + ".csv"), series::serialize_clean(*o.series));
        } else {
            rejected.push_back({{"video_id", files[i].stem().string()}, {"reason", o.rejection}});
        }
    }
    write_json(out_dir / "rejected.json", rejected);
    const auto hist = series::displacement_histogram(masked, 1.0, options.d_max);
    Json h;
    h["bin_width"] = hist.bin_width;
    h["d_max"] = hist.d_max;
    h["counts"] = hist.counts;
    h["total_pairs"] = hist.total_pairs;
    h["fraction_within"] = hist.fraction_within;
    h["per_track_fraction_within"] = hist.per_track_fraction_within;
    write_json(out_dir / "displacement_histogram.json", h);

    Json summary;
    summary["videos"] = files.size();
    summary["cleaned"] = cleaned;
    summary["rejected"] = rejected.size();
    summary["observed_after_mask"] = observed;
    summary["removed_by_smoothing"] = removed;
    summary["kept_fraction"] = observed ? 1.0 - static_cast<double>(removed) / static_cast<double>(observed) : 1.0;
    summary["pairs"] = hist.total_pairs;
    summary["pairs_within_dmax"] = hist.fraction_within;
    return finish(out_dir, summary);
}

Json windows_stage(const fs::path& clean_dir, const WindowParams& params, const fs::path& out_dir) {
    params.validate();
    std::vector<series::CleanSeries> videos;
    for (const auto& file : list_files(clean_dir, ".csv")) {
        videos.push_back(series::parse_clean(util::read_file(file), file.stem().string(), true));
    }
    if (videos.empty()) {
        throw Error("no clean series in " + clean_dir.string());
    }
    std::size_t total = 0, frames = 0;
    for (const auto& v : videos) {
        total += windows::window_count(v.frames, params.omega, params.stride);
        frames += v.frames;
    }
    const auto cap = params.cap ? std::optional<std::size_t>(params.cap) : std::nullopt;
    const auto dataset = windows::build_dataset(videos, params.omega, params.stride, cap, params.seed);
    windows::save_dataset(dataset, out_dir);

    Json summary;
    summary["videos"] = videos.size();
    summary["frames"] = frames;
    summary["windows_total"] = total;
    summary["windows"] = dataset.size();
    summary["dims"] = dataset.matrix.cols;
    summary["seed"] = params.seed;
    return finish(out_dir, summary);
}

Json umap_stage(const fs::path& windows_dir, const embed::UmapParams& params, const fs::path& out_dir) {
    const auto dataset = windows::load_dataset(windows_dir);
    auto model = embed::umap_fit(dataset, params);
    fs::create_directories(out_dir);
    model.training_path = fs::absolute(windows_dir).lexically_normal().lexically_relative(
                                                                          fs::absolute(out_dir).lexically_normal())
                              .generic_string();
    embed::save_model(model, out_dir);

    Json summary;
    summary["windows"] = model.size();
    summary["n_neighbors"] = params.n_neighbors;
    summary["min_dist"] = params.min_dist;
    summary["a"] = model.curve.a;
    summary["b"] = model.curve.b;
    summary["epochs"] = params.epochs;
    summary["seed"] = params.seed;
    summary["init"] = embed::to_string(params.init);
    return finish(out_dir, summary);
}

Json pca_stage(const fs::path& windows_dir, std::size_t dims, const fs::path& out_dir) {
    const auto dataset = windows::load_dataset(windows_dir);
    const auto model = embed::pca_fit(dataset.matrix, dims);
    const auto coords = embed::pca_transform(model, dataset.matrix);
    embed::save_pca(model, coords, dataset.index, out_dir);

    Json summary;
    summary["windows"] = dataset.size();
    summary["dims"] = dims;
    summary["explained_variance_ratio"] = model.explained_variance_ratio;
    return finish(out_dir, summary);
}

Json build_report(const fs::path& out, const Json& parameters, const Json& timings) {
    Json report;
    report["parameters"] = parameters;
    Json stages = Json::object();
    for (const auto& stage : kStages) {
        const auto path = out / stage / "summary.json";
        if (fs::exists(path)) {
            stages[stage] = read_json(path);
        }
    }
    Json seeds = Json::object();
    if (stages.contains("windows")) {
        seeds["windows"] = stages["windows"]["seed"];
    }
    if (stages.contains("embedding")) {
        seeds["umap"] = stages["embedding"]["seed"];
    }
    report["seeds"] = seeds;
    report["stages"] = stages;
    report["timings"] = timings;
    return report;
}

void write_report(const fs::path& out, const Json& report) {
    write_json(out / "report.json", report);
}

Json run_pipeline(const PipelineConfig& config) {
    config.validate();
    const fs::path& out = config.out;
    fs::create_directories(out);

    Json timings = Json::object();
    auto timed = [&](const std::string& name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    series::CleanOptions clean = config.clean;
    clean.parts = effective_parts(config.quality);
    clean.tau = config.quality.tau;
    embed::UmapParams umap = config.umap;
    umap.knn_threads = config.threads;

    timed("spotlight", [&] {
        spotlight_stage(config.detections, config.spotlight, config.hist_bin_seconds, out / "spotlight",
                        config.threads);
    });
    timed("quality", [&] {
        quality_stage(config.poses, out / "spotlight" / "segments.jsonl", config.quality, out / "quality",
                      config.threads);
    });
    timed("clean", [&] {
        clean_stage(config.poses, out / "quality" / "selection.json", clean, out / "clean", config.threads);
    });
    timed("windows", [&] { windows_stage(out / "clean", config.windows, out / "windows"); });
    timed("embedding", [&] { umap_stage(out / "windows", umap, out / "embedding"); });
    timed("pca", [&] { pca_stage(out / "windows", config.pca_dims, out / "pca"); });

    const Json report = build_report(out, config.echo(), timings);
    write_report(out, report);
    return report;
}

} // namespace ethomap::pipeline
