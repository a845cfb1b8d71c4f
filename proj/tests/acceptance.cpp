// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "ethomap/embed/cluster.hpp"
#include "ethomap/embed/fuzzy.hpp"
#include "ethomap/embed/knn.hpp"
#include "ethomap/embed/pca.hpp"
#include "ethomap/embed/umap.hpp"
#include "ethomap/explore/canny.hpp"
#include "ethomap/explore/ensemble.hpp"
#include "ethomap/pipeline.hpp"
#include "ethomap/quality.hpp"
#include "ethomap/series.hpp"
#include "ethomap/spotlight.hpp"
#include "ethomap/synth.hpp"
#include "ethomap/util.hpp"
#include "ethomap/windows.hpp"
#include "support.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace ethomap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

std::set<std::size_t> removed_frames(const Track1P& before, const Track1P& after) {
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i] && !after[i]) {
            out.insert(i);
        }
    }
    return out;
}

Track1P random_gappy_track(std::mt19937_64& rng, std::size_t frames) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Track1P t(frames);
    Point2 p{100 * u(rng), 100 * u(rng)};
    for (auto& s : t) {
        p.x += 3 * u(rng);
        p.y += 3 * u(rng);
        s = p;
    }
    const std::size_t gaps = 1 + rng() % 12;
    for (std::size_t g = 0; g < gaps; ++g) {
        const std::size_t start = rng() % frames;
        for (std::size_t i = start; i < std::min(frames, start + 1 + rng() % 9); ++i) {
            t[i].reset();
        }
    }
    if (series::observed_count(t) < 2) {
        t[0] = Point2{0, 0};
        t[frames - 1] = Point2{1, 1};
    }
    return t;
}

GrayImage step_image(int w, int h, int split, bool vertical) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y) = (vertical ? x : y) < split ? 0 : 255;
        }
    }
    return img;
}

void draw_square(GrayImage& img, int x0, int y0, int size) {
    for (int y = y0; y < y0 + size; ++y) {
        for (int x = x0; x < x0 + size; ++x) {
            img.at(x, y) = 255;
        }
    }
}

std::map<std::string, std::string> files_in(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files[fs::relative(entry.path(), root).generic_string()] = util::read_file(entry.path());
        }
    }
    return files;
}

// ---- criteria ------------------------------------------------------------------------

Outcome spotlight_oracle() {
    const auto scenario = synth::make_crossing_boxes();
    const auto start = Clock::now();
    const auto segs = spotlight::run(scenario.detections, spotlight::SpotlightConfig{});
    const double secs = seconds_since(start);
    // Hand trace: C is never involved; A and B restart after the collision at frame 14;
    // B's post-collision stretch ends at its 7-frame absence after 49 frames and is dropped.
    const std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> want{{2, 0, 119}, {3, 14, 119},
                                                                                {5, 70, 119}};
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> got;
    for (const auto& s : segs) {
        got.emplace_back(s.track_id, s.start_frame, s.end_frame);
    }
    const auto tracks = spotlight::associate_tracks(spotlight::filter_confident(scenario.detections, 0.75), 50.0, 50.0);
    const bool fragment = tracks.size() == 6 && tracks[4].length() == 49;
    return {got == want && fragment && secs < 1.0,
            std::to_string(got.size()) + " segments, 49-frame fragment " + (fragment ? "dropped" : "missing") +
                ", " + fmt(secs * 1000, 3) + " ms"};
}

Outcome smoothing_sensitivity() {
    const auto st = synth::make_spike_track(2000, 20, 50.0, 1.0, 7);
    const auto smoothed = series::differential_smooth(st.observed, 10.0);
    const auto removed = removed_frames(st.observed, smoothed);
    const std::set<std::size_t> spikes(st.spike_frames.begin(), st.spike_frames.end());
    std::size_t caught = 0;
    std::size_t genuine = 0;
    std::size_t genuine_removed = 0;
    for (std::size_t i = 0; i < st.observed.size(); ++i) {
        if (spikes.count(i)) {
            caught += removed.count(i);
        } else if (st.observed[i]) {
            ++genuine;
            genuine_removed += removed.count(i);
        }
    }
    const double sens = static_cast<double>(caught) / static_cast<double>(spikes.size());
    const double fp = static_cast<double>(genuine_removed) / static_cast<double>(genuine);
    const double kept = static_cast<double>(series::observed_count(smoothed)) /
                        static_cast<double>(series::observed_count(st.observed));
    return {spikes.size() == 20 && sens >= 0.95 && fp <= 0.05,
            "spikes removed " + fmt(sens) + ", genuine removed " + fmt(fp) + ", kept " + fmt(kept)};
}

Outcome interpolation_oracle() {
    std::mt19937_64 rng(21);
    double worst = 0.0;
    bool knots = true;
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_gappy_track(rng, 60 + rng() % 100);
        const auto cub = series::interpolate_cubic(t);
        const auto lin = series::interpolate_linear(t);
        const auto ref = oracle::oracle_cubic_fill(t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            worst = std::max({worst, std::abs(cub[i].x - ref[i].x), std::abs(cub[i].y - ref[i].y)});
            if (t[i] && (!(cub[i] == *t[i]) || !(lin[i] == *t[i]))) {
                knots = false;
            }
        }
    }
    const auto st = synth::make_spike_track(2000, 20, 50.0, 1.0, 7);
    const auto smoothed = series::differential_smooth(st.observed, 10.0);
    const auto removed = removed_frames(st.observed, smoothed);
    double agreement = 0.0;
    std::size_t compared = 0;
    for (auto interp : {series::interpolate_linear, series::interpolate_cubic}) {
        const auto a = interp(st.observed);
        const auto b = interp(smoothed);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto it = removed.lower_bound(i >= 30 ? i - 30 : 0);
            if (it == removed.end() || *it > i + 30) {
                ++compared;
                agreement = std::max({agreement, std::abs(a[i].x - b[i].x), std::abs(a[i].y - b[i].y)});
            }
        }
    }
    return {worst <= 1e-9 && knots && agreement <= 1e-9 && compared > 1000,
            "max spline error " + fmt(worst, 3) + ", knots " + (knots ? "exact" : "moved") +
                ", smoothed/raw gap " + fmt(agreement, 3) + " over " + std::to_string(compared) + " frames"};
}

Outcome geomean_selection() {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    bool amgm = true;
    std::vector<quality::QualityReport> reports;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(1 + rng() % 8);
        long double product = 1.0L;
        double sum = 0.0;
        for (auto& v : x) {
            v = u(rng);
            product *= v;
            sum += v;
        }
        const double direct = static_cast<double>(std::pow(product, 1.0L / static_cast<long double>(x.size())));
        const double g = quality::geomean(x);
        worst = std::max(worst, std::abs(g - direct));
        amgm = amgm && g <= sum / static_cast<double>(x.size()) + 1e-15;
        quality::QualityReport r;
        r.video_id = "v" + std::to_string(trial);
        r.geomean = g;
        reports.push_back(r);
    }
    bool monotone = true;
    std::size_t previous = SIZE_MAX;
    for (int i = 0; i <= 100; ++i) {
        const auto n = quality::select_videos(reports, i / 100.0).selected.size();
        monotone = monotone && n <= previous;
        previous = n;
    }
    return {worst <= 1e-12 && amgm && monotone,
            "max deviation " + fmt(worst, 3) + ", AM-GM " + (amgm ? "holds" : "violated") + ", selection " +
                (monotone ? "monotone" : "not monotone")};
}

Outcome window_geometry() {
    bool counts = true;
    for (std::size_t n = 1; n <= 500; ++n) {
        for (std::size_t omega : {1, 10, 60}) {
            for (std::size_t s : {1, 5}) {
                const std::size_t want = n < omega ? 0 : (n - omega) / s + 1;
                counts = counts && windows::window_count(n, omega, s) == want;
            }
        }
    }
    series::CleanSeries cs;
    cs.video_id = "v";
    cs.bodyparts = {"a", "b", "c"};
    cs.frames = 150;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < 150 * 3; ++i) {
        cs.positions.push_back({g(rng), g(rng)});
    }
    bool overlap = true;
    bool built = true;
    for (std::size_t omega : {1, 10, 60}) {
        const auto w = windows::make_windows(cs, omega, 1);
        built = built && w.size() == windows::window_count(150, omega, 1);
        for (std::size_t i = 1; i < w.size(); ++i) {
            for (std::size_t k = 0; k + 6 < omega * 6; ++k) {
                overlap = overlap && w[i].vector[k] == w[i - 1].vector[k + 6];
            }
        }
    }
    return {counts && overlap && built, std::string("count sweep ") + (counts && built ? "exact" : "mismatch") +
                                            ", stride-1 overlap " + (overlap ? "exact" : "mismatch")};
}

Outcome knn_equivalence() {
    const auto data = oracle::random_matrix(1000, 10, 99);
    const auto start = Clock::now();
    const auto g = embed::knn_exact(data, 15);
    const double secs = seconds_since(start);
    const auto brute = oracle::brute_knn(data, 15);
    std::size_t mismatched = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
        const auto ids = g.neighbors(i);
        mismatched += std::vector<std::uint32_t>(ids.begin(), ids.end()) == brute.ids[i] ? 0 : 1;
    }
    return {mismatched == 0 && secs < 5.0,
            std::to_string(mismatched) + " rows differ from brute force, " + fmt(secs, 3) + " s"};
}

Outcome fuzzy_calibration() {
    double worst_sum = 0.0;
    bool symmetric = true;
    for (std::size_t k : {5, 15, 50}) {
        const auto data = oracle::random_matrix(500, 8, 1000 + k);
        const auto knn = embed::knn_exact(data, k);
        const auto g = embed::calibrate_fuzzy(knn);
        for (std::size_t i = 0; i < knn.n; ++i) {
            const auto d = knn.dists(i);
            const std::vector<double> dist(d.begin(), d.end());
            worst_sum = std::max(worst_sum, std::abs(oracle::membership_sum(dist, g.rho[i], g.sigma[i]) -
                                                     std::log2(static_cast<double>(k))));
        }
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
                symmetric = symmetric && g.weight(g.columns[e], i) == g.weights[e];
            }
        }
    }
    return {worst_sum <= 1e-5 && symmetric,
            "max |row sum - log2 k| " + fmt(worst_sum, 3) + ", symmetry " + (symmetric ? "exact" : "broken")};
}

struct BlobRun {
    synth::BlobSet blobs;
    embed::EmbeddingModel model;
    double seconds = 0;
};

const BlobRun& blob_run() {
    static const BlobRun run = [] {
        BlobRun r;
        r.blobs = synth::make_blobs(300, 100, 120, 0.1, 7);
        embed::UmapParams params;
        params.n_neighbors = 15;
        const auto start = Clock::now();
        r.model = embed::umap_fit(r.blobs.train.data, params);
        r.seconds = seconds_since(start);
        return r;
    }();
    return run;
}

Outcome embedding_separability() {
    const auto& r = blob_run();
    const double p = oracle::majority_purity(embed::kmeans(r.model.coords, 3, 7).labels, r.blobs.train.labels);
    return {p >= 0.95 && r.seconds < 60.0, "k-means purity " + fmt(p) + ", " + fmt(r.seconds, 3) + " s"};
}

Outcome nonlinearity_contrast() {
    const auto rings = synth::make_rings(300, 120, 7);
    embed::UmapParams params;
    params.n_neighbors = 15;
    const auto model = embed::umap_fit(rings.data, params);
    const double u = oracle::majority_purity(embed::kmeans(model.coords, 2, 7).labels, rings.labels);
    const auto pca = embed::pca_transform(embed::pca_fit(rings.data, 2), rings.data);
    const double p = oracle::majority_purity(embed::kmeans(pca, 2, 7).labels, rings.labels);
    return {u >= 0.9 && p <= 0.65, "UMAP purity " + fmt(u) + ", PCA purity " + fmt(p)};
}

Outcome transform_consistency() {
    const auto& r = blob_run();
    const auto centroids = oracle::label_centroids(r.model.coords, r.blobs.train.labels);
    const auto placed = embed::umap_transform(r.model, r.blobs.holdout.data);
    const double rate = oracle::nearest_centroid_rate(placed, r.blobs.holdout.labels, centroids);
    return {rate >= 0.9, "held-out nearest own centroid " + fmt(rate)};
}

pipeline::PipelineConfig corpus_config(const fs::path& corpus, const fs::path& out) {
    pipeline::PipelineConfig config;
    config.detections = corpus / "detections";
    config.poses = corpus / "poses";
    config.out = out;
    config.threads = 1;
    return config;
}

Outcome end_to_end(const fs::path& golden) {
    oracle::TempDir dir;
    synth::generate("behavior-modes", synth::SynthOptions{}, dir / "corpus");
    const auto start = Clock::now();
    const auto report = pipeline::run_pipeline(corpus_config(dir / "corpus", dir / "run"));
    const double secs = seconds_since(start);

    const auto truth = nlohmann::json::parse(util::read_file(dir / "corpus" / "truth.json"));
    const auto model = embed::load_model(dir / "run" / "embedding");
    const auto data = windows::load_dataset(dir / "run" / "windows");
    std::vector<int> labels;
    for (const auto& ref : model.provenance) {
        const auto frame_labels = truth.at("videos").at(ref.video_id).at("labels").get<std::vector<int>>();
        std::map<int, std::size_t> votes;
        for (std::size_t t = ref.start_frame; t < ref.start_frame + data.omega; ++t) {
            ++votes[frame_labels.at(t)];
        }
        labels.push_back(std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
                             return a.second < b.second;
                         })->first);
    }
    const double p = oracle::majority_purity(embed::kmeans(model.coords, 3, 7).labels, labels);
    const auto expected = nlohmann::json::parse(util::read_file(golden));
    const bool counts = nlohmann::json::parse(report.at("stages").dump()) == expected.at("stages");
    return {p >= 0.9 && counts && secs < 300.0, "k-means(3) purity " + fmt(p) + " over " +
                                                    std::to_string(labels.size()) + " windows, report counts " +
                                                    (counts ? "match golden" : "differ from golden") + ", " +
                                                    fmt(secs, 3) + " s"};
}

Outcome canny_criterion() {
    std::size_t constant_edges = 0;
    for (double v : explore::canny(GrayImage(32, 24, 128)).values) {
        constant_edges += v > 0 ? 1 : 0;
    }
    bool one_px = true;
    double worst_offset = 0.0;
    for (bool vertical : {true, false}) {
        const auto e = explore::canny(step_image(40, 30, 17, vertical));
        const int lines = vertical ? e.height : e.width;
        const int across = vertical ? e.width : e.height;
        for (int l = 0; l < lines; ++l) {
            std::vector<int> hits;
            for (int a = 0; a < across; ++a) {
                if ((vertical ? e.at(a, l) : e.at(l, a)) > 0) {
                    hits.push_back(a);
                }
            }
            one_px = one_px && hits.size() == 1;
            for (int h : hits) {
                worst_offset = std::max(worst_offset, std::abs(h + 0.5 - 17.0));
            }
        }
    }
    return {constant_edges == 0 && one_px && worst_offset <= 1.0,
            "constant image edges " + std::to_string(constant_edges) + ", step width " +
                (one_px ? "1 px" : "not 1 px") + ", max offset " + fmt(worst_offset) + " px"};
}

Outcome ensemble_arithmetic() {
    explore::MemoryFrameSource source;
    auto frame = [](int sx, int sy) {
        GrayImage img = step_image(80, 60, 60, true);
        draw_square(img, sx, sy, 10);
        return img;
    };
    source.videos["a"] = {frame(5, 5), frame(8, 5)};
    source.videos["b"] = {frame(10, 40), frame(13, 40)};
    explore::EnsembleOptions options;
    options.omega = 2;

    const auto single = explore::ensemble({{"a", 0}}, source, options);
    bool idempotent = true;
    for (std::size_t t = 0; t < 2; ++t) {
        idempotent = idempotent && single.frames[t] == explore::canny(source.videos["a"][t], options.canny);
    }

    const auto clip = explore::ensemble({{"a", 0}, {"b", 0}}, source, options);
    const auto background = explore::canny(step_image(80, 60, 60, true), options.canny);
    bool exact = true;
    std::size_t ones = 0;
    std::size_t halves = 0;
    for (std::size_t t = 0; t < 2; ++t) {
        const auto own_a = explore::canny(source.videos["a"][t], options.canny);
        const auto own_b = explore::canny(source.videos["b"][t], options.canny);
        for (std::size_t i = 0; i < clip.frames[t].values.size(); ++i) {
            const double v = clip.frames[t].values[i];
            if (background.values[i] > 0) {
                exact = exact && v == 1.0;
                ++ones;
            } else if (own_a.values[i] > 0 || own_b.values[i] > 0) {
                exact = exact && v == 0.5;
                ++halves;
            } else {
                exact = exact && v == 0.0;
            }
        }
    }
    return {idempotent && exact && ones > 0 && halves > 0,
            std::string("single window ") + (idempotent ? "idempotent" : "changed") + ", " + std::to_string(ones) +
                " background pixels at 1.0, " + std::to_string(halves) + " mover pixels at 0.5" +
                (exact ? "" : ", values off")};
}

Outcome determinism() {
    oracle::TempDir dir;
    synth::SynthOptions options;
    options.videos = 3;
    options.frames_per_video = 300;
    synth::generate("behavior-modes", options, dir / "corpus");
    auto config = corpus_config(dir / "corpus", dir / "a");
    config.umap.n_neighbors = 30;
    pipeline::run_pipeline(config);
    config.out = dir / "b";
    pipeline::run_pipeline(config);
    auto a = files_in(dir / "a");
    auto b = files_in(dir / "b");
    // report.json carries wall-clock timings and the output path; everything else must match.
    auto strip = [](const std::string& text) {
        auto j = nlohmann::json::parse(text);
        j.erase("timings");
        j.at("parameters").erase("out");
        return j;
    };
    const bool report = strip(a.at("report.json")) == strip(b.at("report.json"));
    a.erase("report.json");
    b.erase("report.json");
    std::size_t differing = 0;
    for (const auto& [name, content] : a) {
        differing += (b.count(name) && b.at(name) == content) ? 0 : 1;
    }
    return {report && differing == 0 && a.size() == b.size(),
            std::to_string(a.size()) + " artifacts compared, " + std::to_string(differing) + " differ, report " +
                (report ? "matches" : "differs") + " apart from timings"};
}

} // namespace

int main(int argc, char** argv) {
    const fs::path golden = argc > 1 ? fs::path(argv[1]) : fs::path(ETHOMAP_GOLDEN_DIR) / "behavior_modes_report.json";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"spotlight oracle", spotlight_oracle},
        {"smoothing sensitivity/specificity", smoothing_sensitivity},
        {"interpolation oracle", interpolation_oracle},
        {"geomean and selection", geomean_selection},
        {"window geometry", window_geometry},
        {"kNN equivalence", knn_equivalence},
        {"fuzzy calibration", fuzzy_calibration},
        {"embedding separability", embedding_separability},
        {"nonlinearity contrast", nonlinearity_contrast},
        {"transform consistency", transform_consistency},
        {"end-to-end", [&] { return end_to_end(golden); }},
        {"canny", canny_criterion},
        {"ensemble arithmetic", ensemble_arithmetic},
        {"determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failures += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << " (" << outcome.detail << ")" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
