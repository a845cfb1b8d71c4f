#include "ethomap/windows.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace ethomap::windows {

std::size_t window_count(std::size_t frames, std::size_t omega, std::size_t stride) {
    if (omega == 0 || stride == 0) {
        throw ValidationError("window size and stride must be at least 1");
    }
    return frames < omega ? 0 : (frames - omega) / stride + 1;
}

std::vector<BehaviorWindow> make_windows(const series::CleanSeries& series, std::size_t omega, std::size_t stride) {
    const std::size_t count = window_count(series.frames, omega, stride);
    const std::size_t f = series.bodyparts.size();
    std::vector<BehaviorWindow> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        BehaviorWindow window;
        window.window_id = w;
        window.video_id = series.video_id;
        window.start_frame = w * stride;
        window.vector.reserve(omega * 2 * f);
        for (std::size_t t = 0; t < omega; ++t) {
            for (std::size_t p = 0; p < f; ++p) {
                const auto& q = series.at(window.start_frame + t, p);
                window.vector.push_back(q.x);
                window.vector.push_back(q.y);
            }
        }
        out.push_back(std::move(window));
    }
    return out;
}

WindowDataset build_dataset(const std::vector<series::CleanSeries>& videos, std::size_t omega, std::size_t stride,
                            std::optional<std::size_t> cap, std::uint64_t seed) {
    WindowDataset dataset;
    dataset.omega = omega;
    dataset.stride = stride;
    if (!videos.empty()) {
        dataset.bodyparts = videos.front().bodyparts;
    }
    for (const auto& v : videos) {
        if (v.bodyparts != dataset.bodyparts) {
            throw ValidationError("video " + v.video_id + " has a different bodypart list");
        }
    }

    std::size_t total = 0;
    for (const auto& v : videos) {
        total += window_count(v.frames, omega, stride);
    }
    std::vector<std::size_t> keep(total);
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    if (cap && *cap < total) {
        std::mt19937_64 rng(seed);
        // Partial Fisher-Yates: the first `cap` slots become a uniform subset.
        for (std::size_t i = 0; i < *cap; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, total - 1);
            std::swap(keep[i], keep[pick(rng)]);
        }
        keep.resize(*cap);
        std::sort(keep.begin(), keep.end());
    }

    const std::size_t dims = omega * 2 * dataset.bodyparts.size();
    dataset.matrix = DataMatrix(keep.size(), dims);
    dataset.index.reserve(keep.size());
    std::size_t global = 0;
    std::size_t next = 0;
    for (const auto& v : videos) {
        const std::size_t count = window_count(v.frames, omega, stride);
        if (next < keep.size() && keep[next] < global + count) {
            for (const auto& w : make_windows(v, omega, stride)) {
                if (next < keep.size() && keep[next] == global + w.window_id) {
                    auto row = dataset.matrix.row(next);
                    std::transform(w.vector.begin(), w.vector.end(), row.begin(),
                                   [](double x) { return static_cast<float>(x); });
                    dataset.index.push_back({w.video_id, w.start_frame});
                    ++next;
                }
            }
        }
        global += count;
    }
    return dataset;
}

std::string index_to_csv(const std::vector<WindowRef>& index) {
    std::string out = "window_id,video_id,start_frame\n";
    for (std::size_t i = 0; i < index.size(); ++i) {
        out += std::to_string(i) + "," + index[i].video_id + "," + std::to_string(index[i].start_frame) + "\n";
    }
    return out;
}

std::vector<WindowRef> index_from_csv(std::string_view text) {
    std::vector<WindowRef> index;
    std::size_t number = 0;
    for (auto line : util::split(text, '\n')) {
        ++number;
        line = util::trim(line);
        if (line.empty() || number == 1) {
            continue;
        }
        const auto cells = util::split(line, ',');
        const auto id = cells.size() == 3 ? util::parse_int(cells[0]) : std::nullopt;
        const auto start = cells.size() == 3 ? util::parse_int(cells[2]) : std::nullopt;
        if (!id || !start || *id != static_cast<long long>(index.size()) || *start < 0) {
            throw ParseError(number, "bad window index row");
        }
        index.push_back({std::string(util::trim(cells[1])), static_cast<std::size_t>(*start)});
    }
    return index;
}

void save_dataset(const WindowDataset& dataset, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    util::write_f32(directory / "windows.f32", dataset.matrix.values);
    util::write_file_atomic(directory / "windows.index.csv", index_to_csv(dataset.index));
    nlohmann::ordered_json meta;
    meta["omega"] = dataset.omega;
    meta["stride"] = dataset.stride;
    meta["f"] = dataset.bodyparts.size();
    meta["bodyparts"] = dataset.bodyparts;
    meta["N"] = dataset.size();
    meta["dims"] = dataset.matrix.cols;
    util::write_file_atomic(directory / "windows.meta.json", meta.dump(2) + "\n");
}

WindowDataset load_dataset(const std::filesystem::path& directory) {
    WindowDataset dataset;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(util::read_file(directory / "windows.meta.json"));
        dataset.omega = meta.at("omega").get<std::size_t>();
        dataset.stride = meta.at("stride").get<std::size_t>();
        dataset.bodyparts = meta.at("bodyparts").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error((directory / "windows.meta.json").string() + ": " + e.what());
    }
    const std::size_t n = meta.at("N").get<std::size_t>();
    const std::size_t dims = meta.at("dims").get<std::size_t>();
    dataset.matrix.rows = n;
    dataset.matrix.cols = dims;
    dataset.matrix.values = util::read_f32(directory / "windows.f32");
    if (dataset.matrix.values.size() != n * dims) {
        throw Error((directory / "windows.f32").string() + ": expected " + std::to_string(n * dims) + " values");
    }
    dataset.index = index_from_csv(util::read_file(directory / "windows.index.csv"));
    if (dataset.index.size() != n) {
        throw Error((directory / "windows.index.csv").string() + ": row count does not match N");
    }
    return dataset;
}

} // namespace ethomap::windows
