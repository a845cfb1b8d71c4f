#include "cli.hpp"

#include "ethomap/embed/pca.hpp"
#include "ethomap/embed/sweep.hpp"
#include "ethomap/error.hpp"
#include "ethomap/explore/ensemble.hpp"
#include "ethomap/explore/region.hpp"
#include "ethomap/pipeline.hpp"
#include "ethomap/quality.hpp"
#include "ethomap/service.hpp"
#include "ethomap/synth.hpp"
#include "ethomap/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <iostream>
#include <numeric>
#include <random>
#include <thread>

namespace ethomap::cli {

namespace fs = std::filesystem;
using pipeline::Json;

namespace {

unsigned machine_threads() {
    return std::max(1u, std::thread::hardware_concurrency());
}

void add_spotlight_flags(CLI::App& app, spotlight::SpotlightConfig& c, double& bin_seconds) {
    app.add_option("--confidence", c.confidence_threshold, "minimum detection confidence")->capture_default_str();
    app.add_option("--delta", c.grace_delta, "grace margin in pixels")->capture_default_str();
    app.add_option("--epsilon", c.epsilon, "max center displacement between frames")->capture_default_str();
    app.add_option("--min-frames", c.min_frames, "shortest kept segment")->capture_default_str();
    app.add_option("--width", c.frame_bounds.width, "frame width when the detections header has none")
        ->capture_default_str();
    app.add_option("--height", c.frame_bounds.height, "frame height when the detections header has none")
        ->capture_default_str();
    app.add_option("--hist-bin", bin_seconds, "segment length histogram bin, seconds")->capture_default_str();
}

void add_quality_flags(CLI::App& app, pipeline::QualityParams& q) {
    app.add_option("--tau", q.tau, "likelihood below which a keypoint is missing")->capture_default_str();
    app.add_option("--geomean-threshold", q.geomean_threshold, "minimum geomean quality")->capture_default_str();
    app.add_option("--parts", q.parts, "bodyparts, comma separated")->delimiter(',');
}

void add_clean_flags(CLI::App& app, series::CleanOptions& c, std::string& interp) {
    app.add_option("--dmax", c.d_max, "max displacement between consecutive frames")->capture_default_str();
    app.add_option("--interp", interp, "cubic or linear")->check(CLI::IsMember({"cubic", "linear"}))
        ->capture_default_str();
    app.add_flag("--no-smooth{false}", c.smooth, "skip differential smoothing");
    app.add_flag("--no-normalize{false}", c.normalize, "keep absolute coordinates");
}

void add_window_flags(CLI::App& app, pipeline::WindowParams& w) {
    app.add_option("--omega", w.omega, "window length in frames")->capture_default_str();
    app.add_option("--stride", w.stride, "frames between window starts")->capture_default_str();
    app.add_option("--cap", w.cap, "uniform subsample size, 0 keeps all")->capture_default_str();
    app.add_option("--window-seed", w.seed, "subsample seed")->capture_default_str();
}

void add_umap_flags(CLI::App& app, embed::UmapParams& u, std::string& init) {
    app.add_option("--neighbors", u.n_neighbors, "n_neighbors")->capture_default_str();
    app.add_option("--min-dist", u.min_dist, "min_dist")->capture_default_str();
    app.add_option("--spread", u.spread, "spread")->capture_default_str();
    app.add_option("--epochs", u.epochs, "optimization epochs")->capture_default_str();
    app.add_option("--seed", u.seed, "layout seed")->capture_default_str();
    app.add_option("--negative-rate", u.negative_rate, "negative samples per positive")->capture_default_str();
    app.add_option("--learning-rate", u.learning_rate, "initial learning rate")->capture_default_str();
    app.add_option("--init", init, "spectral or random")->check(CLI::IsMember({"spectral", "random"}))
        ->capture_default_str();
    app.add_option("--sgd-threads", u.threads, "layout workers; 1 is bit-reproducible")->capture_default_str();
}

series::Interpolation interpolation_of(const std::string& name) {
    return name == "linear" ? series::Interpolation::Linear : series::Interpolation::Cubic;
}

// Flat `key = value` file; keys are long flag names (dashes or underscores).
// Values only fill options not given on the command line.
void apply_config(CLI::App& app, const fs::path& path) {
    if (!fs::exists(path)) {
        throw ValidationError("config file not found: " + path.string());
    }
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path.string());
    } catch (const CLI::Error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") {
            continue;  // section markers
        }
        if (!item.parents.empty()) {
            throw ValidationError(path.string() + ": sections are not supported (" + item.fullname() + ")");
        }
        std::string name = item.name;
        std::replace(name.begin(), name.end(), '_', '-');
        if (name == "config") {
            throw ValidationError(path.string() + ": nested config is not supported");
        }
        CLI::Option* opt = app.get_option_no_throw("--" + name);
        if (opt == nullptr) {
            throw ValidationError(path.string() + ": unknown key '" + item.name + "'");
        }
        if (opt->count() > 0) {
            continue;  // flag given explicitly
        }
        try {
            for (const auto& value : item.inputs) {
                opt->add_result(value);
            }
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ValidationError(path.string() + ": " + item.name + ": " + e.what());
        }
    }
}

windows::DataMatrix take_rows(const windows::DataMatrix& m, const std::vector<std::size_t>& rows) {
    windows::DataMatrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

explore::Region region_from_flags(const std::string& rect, const std::string& disc) {
    if (rect.empty() == disc.empty()) {
        throw ValidationError("give exactly one of --rect and --disc");
    }
    return rect.empty() ? explore::parse_disc(disc) : explore::parse_rect(rect);
}

void print(std::ostream& out, const Json& value) {
    out << value.dump(2) << '\n';
}

// Blocks SIGINT/SIGTERM on the calling thread and stops `server` when one arrives.
void serve_until_signal(service::Server& server) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::jthread watcher([&](std::stop_token stop) {
        const timespec tick{0, 200'000'000};
        while (!stop.stop_requested()) {
            if (sigtimedwait(&set, nullptr, &tick) > 0) {
                server.stop();
                return;
            }
        }
    });
    server.listen();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavioral embedding pipeline for pose-tracked video", "ethomap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ethomap 0.1.0");

    pipeline::PipelineConfig config;
    config.threads = machine_threads();
    std::string interp = "cubic";
    std::string init = "spectral";
    fs::path out_dir;
    std::vector<std::function<void()>> actions;  // the parsed subcommand's body

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic corpus with truth.json");
    std::string profile;
    synth::SynthOptions synth_options;
    synth->add_option("profile", profile, "profile")->required()->check(CLI::IsMember(synth::kProfiles));
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", synth_options.seed, "generator seed")->capture_default_str();
    synth->add_flag("--frames", synth_options.frames, "behavior-modes: render camera frames");
    synth->add_option("--videos", synth_options.videos, "behavior-modes: recordings")->capture_default_str();
    synth->add_option("--frames-per-video", synth_options.frames_per_video, "behavior-modes: frames per recording")
        ->capture_default_str();
    synth->add_option("--spikes", synth_options.spikes, "spike-track: injected spikes")->capture_default_str();
    synth->callback([&] {
        actions.push_back([&] {
            synth::generate(profile, synth_options, out_dir);
            print(out, Json{{"profile", profile}, {"out", out_dir.string()}, {"seed", synth_options.seed}});
        });
    });

    // spotlight
    auto* spot = app.add_subcommand("spotlight", "confidence filter, track association and collision pruning");
    fs::path detections;
    spot->add_option("detections", detections, "detections JSONL file or directory")->required()
        ->check(CLI::ExistingPath);
    spot->add_option("--out", out_dir, "output directory")->required();
    add_spotlight_flags(*spot, config.spotlight, config.hist_bin_seconds);
    spot->add_option("--threads", config.threads, "workers")->capture_default_str();
    spot->callback([&] {
        actions.push_back([&] {
            config.spotlight.validate();
            if (!(config.hist_bin_seconds > 0)) {
                throw ValidationError("--hist-bin must be positive");
            }
            print(out, pipeline::spotlight_stage(detections, config.spotlight, config.hist_bin_seconds, out_dir,
                                                 config.threads));
        });
    });

    // quality
    auto* qual = app.add_subcommand("quality", "per-video geomean quality and selection");
    fs::path poses;
    fs::path segments;
    qual->add_option("poses", poses, "directory of pose CSVs")->required()->check(CLI::ExistingDirectory);
    qual->add_option("--segments", segments, "only assess tables with a spotlight segment")
        ->check(CLI::ExistingFile);
    qual->add_option("--out", out_dir, "output directory")->required();
    add_quality_flags(*qual, config.quality);
    qual->add_option("--threads", config.threads, "workers")->capture_default_str();
    qual->callback([&] {
        actions.push_back([&] {
            config.quality.validate();
            const auto seg = segments.empty() ? std::nullopt : std::optional<fs::path>(segments);
            print(out, pipeline::quality_stage(poses, seg, config.quality, out_dir, config.threads));
        });
    });

    // smooth
    auto* smooth = app.add_subcommand("smooth", "mask, smooth, interpolate and normalize pose tables");
    fs::path selection;
    smooth->add_option("poses", poses, "directory of pose CSVs")->required()->check(CLI::ExistingDirectory);
    smooth->add_option("--selection", selection, "selection.json from quality")->check(CLI::ExistingFile);
    smooth->add_option("--out", out_dir, "output directory")->required();
    smooth->add_option("--tau", config.quality.tau, "likelihood below which a keypoint is missing")
        ->capture_default_str();
    smooth->add_option("--parts", config.quality.parts, "bodyparts, comma separated")->delimiter(',');
    add_clean_flags(*smooth, config.clean, interp);
    smooth->add_option("--threads", config.threads, "workers")->capture_default_str();
    smooth->callback([&] {
        actions.push_back([&] {
            config.quality.validate();
            auto clean = config.clean;
            clean.interpolation = interpolation_of(interp);
            clean.tau = config.quality.tau;
            clean.parts = config.quality.parts.empty() ? quality::kDefaultParts : config.quality.parts;
            if (!(clean.d_max > 0)) {
                throw ValidationError("--dmax must be positive");
            }
            const auto sel = selection.empty() ? std::nullopt : std::optional<fs::path>(selection);
            print(out, pipeline::clean_stage(poses, sel, clean, out_dir, config.threads));
        });
    });

    // windows
    auto* win = app.add_subcommand("windows", "sliding behavioral windows");
    fs::path input_dir;
    win->add_option("clean", input_dir, "directory of cleaned series")->required()->check(CLI::ExistingDirectory);
    win->add_option("--out", out_dir, "output directory")->required();
    add_window_flags(*win, config.windows);
    win->callback([&] {
        actions.push_back([&] {
            config.windows.validate();
            print(out, pipeline::windows_stage(input_dir, config.windows, out_dir));
        });
    });

    // umap
    auto* umap = app.add_subcommand("umap", "fit the 2-D embedding");
    umap->add_option("windows", input_dir, "windows directory")->required()->check(CLI::ExistingDirectory);
    umap->add_option("--out", out_dir, "output directory")->required();
    add_umap_flags(*umap, config.umap, init);
    umap->add_option("--threads", config.threads, "kNN workers")->capture_default_str();
    umap->callback([&] {
        actions.push_back([&] {
            auto params = config.umap;
            params.init = embed::init_from_string(init);
            params.knn_threads = config.threads;
            params.validate();
            print(out, pipeline::umap_stage(input_dir, params, out_dir));
        });
    });

    // pca
    auto* pca = app.add_subcommand("pca", "linear baseline projection");
    pca->add_option("windows", input_dir, "windows directory")->required()->check(CLI::ExistingDirectory);
    pca->add_option("--out", out_dir, "output directory")->required();
    pca->add_option("--dims", config.pca_dims, "components")->capture_default_str();
    pca->callback([&] {
        actions.push_back([&] { print(out, pipeline::pca_stage(input_dir, config.pca_dims, out_dir)); });
    });

    // sweep
    auto* sw = app.add_subcommand("sweep", "hyperparameter grid scored on held-out windows");
    std::vector<std::size_t> sweep_neighbors{5, 15, 50, 200};
    std::vector<double> sweep_min_dists{0.0, 0.1, 0.5};
    std::string metric = "silhouette";
    fs::path validation_dir;
    double holdout = 0.1;
    std::uint64_t split_seed = 7;
    fs::path csv_path;
    sw->add_option("windows", input_dir, "training windows directory")->required()
        ->check(CLI::ExistingDirectory);
    sw->add_option("--validation", validation_dir, "held-out windows directory")->check(CLI::ExistingDirectory);
    sw->add_option("--holdout", holdout, "fraction held out when --validation is absent")->capture_default_str();
    sw->add_option("--split-seed", split_seed, "holdout split seed")->capture_default_str();
    sw->add_option("--neighbors", sweep_neighbors, "n_neighbors grid")->delimiter(',')->capture_default_str();
    sw->add_option("--min-dist", sweep_min_dists, "min_dist grid")->delimiter(',')->capture_default_str();
    sw->add_option("--metric", metric, "silhouette or trustworthiness")
        ->check(CLI::IsMember({"silhouette", "trustworthiness"}))->capture_default_str();
    sw->add_option("--epochs", config.umap.epochs, "optimization epochs")->capture_default_str();
    sw->add_option("--seed", config.umap.seed, "layout seed")->capture_default_str();
    sw->add_option("--out", csv_path, "CSV output (stdout when absent)");
    sw->callback([&] {
        actions.push_back([&] {
            if (!(holdout > 0 && holdout < 1)) {
                throw ValidationError("--holdout must be in (0, 1)");
            }
            embed::SweepOptions options;
            options.neighbors = sweep_neighbors;
            options.min_dists = sweep_min_dists;
            options.metric = embed::metric_from_string(metric);
            options.base = config.umap;
            options.base.knn_threads = config.threads;
            const auto train = windows::load_dataset(input_dir);
            windows::DataMatrix fit;
            windows::DataMatrix check;
            if (!validation_dir.empty()) {
                fit = train.matrix;
                check = windows::load_dataset(validation_dir).matrix;
            } else {
                std::vector<std::size_t> order(train.matrix.rows);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::mt19937_64 rng(split_seed);
                std::shuffle(order.begin(), order.end(), rng);
                const auto n_check = std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::llround(holdout * static_cast<double>(order.size()))));
                if (n_check >= order.size()) {
                    throw ValidationError("too few windows to hold out a validation set");
                }
                std::vector<std::size_t> check_rows(order.begin(), order.begin() + n_check);
                std::vector<std::size_t> fit_rows(order.begin() + n_check, order.end());
                std::sort(check_rows.begin(), check_rows.end());
                std::sort(fit_rows.begin(), fit_rows.end());
                fit = take_rows(train.matrix, fit_rows);
                check = take_rows(train.matrix, check_rows);
            }
            const auto csv = embed::sweep_to_csv(embed::sweep(fit, check, options));
            if (csv_path.empty()) {
                out << csv;
            } else {
                util::write_file_atomic(csv_path, csv);
            }
        });
    });

    // query
    auto* query = app.add_subcommand("query", "window ids inside an embedding region");
    fs::path model_dir;
    std::string rect;
    std::string disc;
    query->add_option("model", model_dir, "embedding directory")->required()->check(CLI::ExistingDirectory);
    query->add_option("--rect", rect, "x0,x1,y0,y1");
    query->add_option("--disc", disc, "cx,cy,r");
    query->callback([&] {
        actions.push_back([&] {
            const auto region = region_from_flags(rect, disc);
            const auto model = embed::load_model(model_dir);
            out << explore::query_to_json(explore::query_region(model, region)) << '\n';
        });
    });

    // ensemble
    auto* ens = app.add_subcommand("ensemble", "edge-ensemble clip for an embedding region");
    fs::path frames_dir;
    explore::CannyParams canny;
    std::size_t omega = 0;
    ens->add_option("model", model_dir, "embedding directory")->required()->check(CLI::ExistingDirectory);
    ens->add_option("--rect", rect, "x0,x1,y0,y1");
    ens->add_option("--disc", disc, "cx,cy,r");
    ens->add_option("--frames-dir", frames_dir, "camera frames root (<root>/<video>/%06d.png)")->required()
        ->check(CLI::ExistingDirectory);
    ens->add_option("--segments", segments, "spotlight segments mapping window videos to recordings")
        ->check(CLI::ExistingFile);
    ens->add_option("--omega", omega, "window length; read from the model's windows when absent");
    ens->add_option("--low", canny.low, "hysteresis low threshold")->capture_default_str();
    ens->add_option("--high", canny.high, "hysteresis high threshold")->capture_default_str();
    ens->add_option("--sigma", canny.sigma, "gaussian blur sigma")->capture_default_str();
    ens->add_option("--out", out_dir, "clip directory")->required();
    ens->add_option("--threads", config.threads, "workers")->capture_default_str();
    ens->callback([&] {
        actions.push_back([&] {
            const auto region = region_from_flags(rect, disc);
            canny.validate();
            const auto model = embed::load_model(model_dir);
            std::map<std::string, explore::SegmentOrigin> origins;
            const auto seg = segments.empty() ? service::default_segments(model_dir) : std::optional(segments);
            if (seg) {
                origins = explore::DirectoryFrameSource::origins_from_segments(*seg);
            }
            const explore::DirectoryFrameSource source(frames_dir, std::move(origins));
            std::vector<windows::WindowRef> refs;
            for (std::size_t i : explore::query_region(model, region).ids) {
                refs.push_back(model.provenance[i]);
            }
            explore::EnsembleOptions options;
            options.omega = omega > 0 ? omega : service::model_omega(model_dir).value_or(60);
            options.canny = canny;
            options.threads = config.threads;
            auto clip = explore::ensemble(refs, source, options);
            clip.region = region;
            explore::export_clip(clip, out_dir);
            for (const auto& warning : clip.warnings) {
                err << "warning: " << warning << '\n';
            }
            print(out, Json{{"frames", clip.frames.size()},
                            {"window_count", clip.window_count},
                            {"skipped", clip.skipped},
                            {"out", out_dir.string()}});
        });
    });

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP API and explorer UI");
    service::SessionOptions session;
    fs::path labels_path = "labels.json";
    std::string bind = "127.0.0.1:8080";
    srv->add_option("--model", model_dir, "embedding directory")->required()->check(CLI::ExistingDirectory);
    srv->add_option("--labels", labels_path, "labels store")->capture_default_str();
    srv->add_option("--frames", frames_dir, "camera frames root")->check(CLI::ExistingDirectory);
    srv->add_option("--segments", segments, "spotlight segments JSONL")->check(CLI::ExistingFile);
    srv->add_option("--ui", input_dir, "built explorer bundle")->check(CLI::ExistingDirectory);
    srv->add_option("--bind", bind, "host:port; port 0 picks a free one")->capture_default_str();
    srv->add_option("--threads", config.threads, "ensemble workers")->capture_default_str();
    srv->callback([&] {
        actions.push_back([&] {
            const auto [host, port] = service::parse_bind(bind);
            session.model = model_dir;
            session.labels = labels_path;
            if (!frames_dir.empty()) {
                session.frames = frames_dir;
            }
            if (!segments.empty()) {
                session.segments = segments;
            }
            if (!input_dir.empty()) {
                session.ui = input_dir;
            }
            session.threads = config.threads;
            service::Server server(session);
            const int bound = server.bind(host, port);
            out << "listening on http://" << host << ':' << bound << std::endl;
            serve_until_signal(server);
        });
    });

    // report
    auto* rep = app.add_subcommand("report", "rebuild report.json from stage summaries");
    rep->add_option("run", out_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    rep->callback([&] {
        actions.push_back([&] {
            Json parameters = Json::object();
            Json timings = Json::object();
            if (fs::exists(out_dir / "report.json")) {
                const auto previous = Json::parse(util::read_file(out_dir / "report.json"));
                parameters = previous.value("parameters", Json::object());
                timings = previous.value("timings", Json::object());
            }
            const auto report = pipeline::build_report(out_dir, parameters, timings);
            pipeline::write_report(out_dir, report);
            print(out, report);
        });
    });

    // run
    auto* run_cmd = app.add_subcommand("run", "every stage in order, then report.json");
    fs::path config_path;
    run_cmd->add_option("--config", config_path, "flat key = value file; flags given here win");
    run_cmd->add_option("--detections", config.detections, "detections JSONL file or directory");
    run_cmd->add_option("--poses", config.poses, "directory of pose CSVs");
    run_cmd->add_option("--out", config.out, "output directory");
    add_spotlight_flags(*run_cmd, config.spotlight, config.hist_bin_seconds);
    add_quality_flags(*run_cmd, config.quality);
    add_clean_flags(*run_cmd, config.clean, interp);
    add_window_flags(*run_cmd, config.windows);
    add_umap_flags(*run_cmd, config.umap, init);
    run_cmd->add_option("--pca-dims", config.pca_dims, "PCA components")->capture_default_str();
    run_cmd->add_option("--threads", config.threads, "per-video workers")->capture_default_str();
    run_cmd->callback([&] {
        actions.push_back([&] {
            if (!config_path.empty()) {
                apply_config(*run_cmd, config_path);
            }
            if (config.detections.empty() || config.poses.empty() || config.out.empty()) {
                throw ValidationError("run needs detections, poses and out (flags or config keys)");
            }
            config.clean.interpolation = interpolation_of(interp);
            config.umap.init = embed::init_from_string(init);
            print(out, pipeline::run_pipeline(config));
        });
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << e.what() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        // Subcommand help is raised from the subcommand itself.
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            for (auto* sub : app.get_subcommands()) {
                out << sub->help();
            }
            return 0;
        }
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        for (auto& action : actions) {
            action();
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace ethomap::cli
