#include "ethomap/service.hpp"

#include "ethomap/error.hpp"
#include "ethomap/ingest.hpp"
#include "ethomap/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

namespace ethomap::service {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::optional<std::size_t> model_omega(const fs::path& model_dir) {
    try {
        const auto meta = nlohmann::json::parse(util::read_file(model_dir / "embedding.json"));
        const std::string training = meta.value("training", std::string());
        if (training.empty()) {
            return std::nullopt;
        }
        fs::path dir = training;
        if (dir.is_relative()) {
            dir = model_dir / dir;
        }
        if (!fs::exists(dir / "windows.meta.json")) {
            return std::nullopt;
        }
        return nlohmann::json::parse(util::read_file(dir / "windows.meta.json")).at("omega").get<std::size_t>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<fs::path> default_segments(const fs::path& model_dir) {
    const auto candidate = model_dir / ".." / "spotlight" / "segments.jsonl";
    if (fs::exists(candidate)) {
        return candidate.lexically_normal();
    }
    return std::nullopt;
}

std::pair<std::string, int> parse_bind(const std::string& text) {
    const auto colon = text.rfind(':');
    const auto port = colon == std::string::npos ? std::nullopt : util::parse_int(text.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535 || colon == 0) {
        throw ValidationError("bind address must look like host:port, got '" + text + "'");
    }
    return {text.substr(0, colon), static_cast<int>(*port)};
}

namespace {

struct Job {
    enum class Status { Pending, Running, Done, Failed };
    std::atomic<Status> status{Status::Pending};
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> total{0};
    std::mutex mutex;  // guards the fields below once the worker has finished
    std::string error;
    explore::EnsembleClip clip;
    std::map<std::size_t, std::string> png_cache;
};

const char* status_name(Job::Status s) {
    switch (s) {
    case Job::Status::Pending:
        return "pending";
    case Job::Status::Running:
        return "running";
    case Job::Status::Done:
        return "done";
    default:
        return "failed";
    }
}

void send_json(httplib::Response& res, const std::string& body, int status = 200) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, Json{{"error", message}}.dump(), status);
}

const char* kPlaceholder = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>ethomap</title></head>
<body><h1>ethomap</h1><p>The explorer bundle is not installed. Start the service with
<code>--ui &lt;dir&gt;</code> pointing at a built bundle. The JSON API is under <code>/api/</code>.</p></body></html>
)";

} // namespace

struct Server::State {
    SessionOptions options;
    embed::EmbeddingModel model;
    std::string embedding_json;
    std::string meta_json;
    std::size_t omega = 60;
    explore::LabelStore labels;
    std::unique_ptr<explore::DirectoryFrameSource> frames;
    httplib::Server http;

    std::mutex jobs_mutex;
    std::map<std::int64_t, std::shared_ptr<Job>> jobs;
    std::int64_t next_job = 1;
    std::vector<std::thread> workers;
    std::atomic<bool> stopping{false};

    explicit State(const SessionOptions& o)
        : options(o), model(embed::load_model(o.model)), labels(o.labels) {
        omega = o.omega.value_or(model_omega(o.model).value_or(60));
        if (o.frames) {
            std::map<std::string, explore::SegmentOrigin> origins;
            const auto segments = o.segments ? o.segments : default_segments(o.model);
            if (segments) {
                origins = explore::DirectoryFrameSource::origins_from_segments(*segments);
            }
            frames = std::make_unique<explore::DirectoryFrameSource>(*o.frames, std::move(origins));
        }
        build_static_payloads();
        routes();
    }

    ~State() {
        stopping = true;
        for (auto& w : workers) {
            if (w.joinable()) {
                w.join();
            }
        }
    }

    void build_static_payloads() {
        Json points = Json::array();
        double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
        std::map<std::string, std::size_t> per_video;
        for (std::size_t i = 0; i < model.size(); ++i) {
            const double x = model.coords.at(i, 0);
            const double y = model.coords.dims > 1 ? model.coords.at(i, 1) : 0.0;
            const auto& ref = model.provenance[i];
            points.push_back({{"id", i}, {"x", x}, {"y", y}, {"video", ref.video_id}, {"start", ref.start_frame}});
            if (i == 0) {
                x_min = x_max = x;
                y_min = y_max = y;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
            ++per_video[ref.video_id];
        }
        embedding_json = points.dump();

        Json meta;
        meta["n"] = model.size();
        meta["dims"] = model.coords.dims;
        meta["n_neighbors"] = model.params.n_neighbors;
        meta["min_dist"] = model.params.min_dist;
        meta["a"] = model.curve.a;
        meta["b"] = model.curve.b;
        meta["seed"] = model.params.seed;
        meta["epochs"] = model.params.epochs;
        meta["omega"] = omega;
        meta["bounds"] = {{"x_min", x_min}, {"x_max", x_max}, {"y_min", y_min}, {"y_max", y_max}};
        Json videos = Json::object();
        for (const auto& [video, count] : per_video) {
            videos[video] = count;
        }
        meta["videos"] = videos;
        meta["frames_available"] = frames != nullptr;
        meta_json = meta.dump();
    }

    std::shared_ptr<Job> find_job(const std::string& text) {
        const auto id = util::parse_int(text);
        std::lock_guard lock(jobs_mutex);
        const auto it = id ? jobs.find(*id) : jobs.end();
        return it == jobs.end() ? nullptr : it->second;
    }

    Json job_json(std::int64_t id, Job& job) {
        Json out;
        out["job"] = id;
        const auto status = job.status.load();
        out["status"] = status_name(status);
        out["progress"] = {{"done", job.done.load()}, {"total", job.total.load()}};
        if (status == Job::Status::Done) {
            std::lock_guard lock(job.mutex);
            out["window_count"] = job.clip.window_count;
            out["skipped"] = job.clip.skipped;
            out["warnings"] = job.clip.warnings;
            Json urls = Json::array();
            for (std::size_t t = 0; t < job.clip.frames.size(); ++t) {
                urls.push_back("/api/ensemble/" + std::to_string(id) + "/frame/" + std::to_string(t));
            }
            out["frames"] = urls;
        } else if (status == Job::Status::Failed) {
            std::lock_guard lock(job.mutex);
            out["error"] = job.error;
        }
        return out;
    }

    void routes() {
        http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const ValidationError& e) {
                send_error(res, 400, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        });

        http.Get("/api/embedding", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, embedding_json);
        });
        http.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) { send_json(res, meta_json); });

        http.Post("/api/query", [this](const httplib::Request& req, httplib::Response& res) {
            const auto region = parse_region_body(req.body);
            send_json(res, explore::query_to_json(explore::query_region(model, region)));
        });

        http.Get("/api/labels", [this](const httplib::Request&, httplib::Response& res) {
            Json out;
            out["labels"] = Json::array();
            for (const auto& label : labels.list()) {
                out["labels"].push_back(explore::label_to_json(label));
            }
            send_json(res, out.dump());
        });
        http.Get(R"(/api/labels/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto id = util::parse_int(req.matches[1].str());
            const auto label = id ? labels.get(*id) : std::nullopt;
            if (!label) {
                send_error(res, 404, "unknown label id");
                return;
            }
            send_json(res, explore::label_to_json(*label).dump());
        });
        http.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what());
            }
            if (!body.is_object() || !body.contains("region")) {
                throw ValidationError("label needs a region");
            }
            const auto region = explore::region_from_json(body.at("region"));
            const auto text = body.value("text", std::string());
            const auto author = body.value("author", std::string());
            const auto id = labels.add(region, text, author);
            send_json(res, Json{{"id", id}}.dump(), 201);
        });
        http.Delete(R"(/api/labels/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto id = util::parse_int(req.matches[1].str());
            if (!id || !labels.remove(*id)) {
                send_error(res, 404, "unknown label id");
                return;
            }
            send_json(res, Json{{"deleted", *id}}.dump());
        });

        http.Post("/api/ensemble", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what());
            }
            const auto region = explore::region_from_json(body);
            explore::CannyParams canny;
            canny.low = body.value("low", canny.low);
            canny.high = body.value("high", canny.high);
            canny.sigma = body.value("sigma", canny.sigma);
            canny.validate();
            if (!frames) {
                send_error(res, 409, "the service was started without a frames directory");
                return;
            }
            send_json(res, Json{{"job", start_job(region, canny)}}.dump(), 202);
        });
        http.Get(R"(/api/ensemble/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = find_job(req.matches[1].str());
            if (!job) {
                send_error(res, 404, "unknown job");
                return;
            }
            send_json(res, job_json(*util::parse_int(req.matches[1].str()), *job).dump());
        });
        http.Get(R"(/api/ensemble/(\d+)/frame/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = find_job(req.matches[1].str());
            const auto t = util::parse_int(req.matches[2].str());
            if (!job || !t) {
                send_error(res, 404, "unknown job");
                return;
            }
            if (job->status.load() != Job::Status::Done) {
                send_error(res, 409, "job has not finished");
                return;
            }
            std::lock_guard lock(job->mutex);
            const auto index = static_cast<std::size_t>(*t);
            if (index >= job->clip.frames.size()) {
                send_error(res, 404, "frame out of range");
                return;
            }
            auto& png = job->png_cache[index];
            if (png.empty()) {
                png = encode_png(explore::to_image(job->clip.frames[index]));
            }
            res.set_content(png, "image/png");
        });

        if (options.ui && fs::is_directory(*options.ui)) {
            http.set_mount_point("/", options.ui->string());
        } else {
            http.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kPlaceholder, "text/html; charset=utf-8");
            });
        }
    }

    explore::Region parse_region_body(const std::string& text) {
        try {
            return explore::region_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed JSON: ") + e.what());
        }
    }

    std::int64_t start_job(const explore::Region& region, const explore::CannyParams& canny) {
        auto job = std::make_shared<Job>();
        std::int64_t id = 0;
        {
            std::lock_guard lock(jobs_mutex);
            id = next_job++;
            jobs[id] = job;
        }
        std::vector<windows::WindowRef> refs;
        for (std::size_t i : explore::query_region(model, region).ids) {
            refs.push_back(model.provenance[i]);
        }
        std::lock_guard lock(jobs_mutex);
        workers.emplace_back([this, job, refs = std::move(refs), region, canny] {
            job->status = Job::Status::Running;
            try {
                explore::EnsembleOptions options;
                options.omega = omega;
                options.canny = canny;
                options.threads = this->options.threads;
                options.progress = [&](std::size_t done, std::size_t total) {
                    job->done = done;
                    job->total = total;
                    if (stopping) {
                        throw Error("service stopping");
                    }
                };
                auto clip = explore::ensemble(refs, *frames, options);
                clip.region = region;
                {
                    std::lock_guard inner(job->mutex);
                    job->clip = std::move(clip);
                }
                job->status = Job::Status::Done;
            } catch (const std::exception& e) {
                {
                    std::lock_guard inner(job->mutex);
                    job->error = e.what();
                }
                job->status = Job::Status::Failed;
            }
        });
        return id;
    }
};

Server::Server(const SessionOptions& options) : state_(std::make_unique<State>(options)) {}

Server::~Server() {
    stop();
}

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = state_->http.bind_to_any_port(host);
        if (bound <= 0) {
            throw Error("cannot bind " + host);
        }
        return bound;
    }
    if (!state_->http.bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Server::listen() {
    state_->http.listen_after_bind();
}

void Server::stop() {
    if (state_) {
        state_->stopping = true;
        state_->http.stop();
    }
}

void Server::wait_until_ready() const {
    state_->http.wait_until_ready();
}

} // namespace ethomap::service
