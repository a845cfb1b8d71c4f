#include "ethomap/ingest.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace ethomap::ingest {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t PoseSeries::part_index(std::string_view name) const {
    for (std::size_t i = 0; i < bodyparts.size(); ++i) {
        if (bodyparts[i] == name) {
            return i;
        }
    }
    throw ValidationError("unknown bodypart '" + std::string(name) + "' in " + video_id);
}

void validate(const BoundingBox& box) {
    if (!(box.x0 < box.x1)) {
        throw ValidationError("bounding box needs x0 < x1");
    }
    if (!(box.y0 < box.y1)) {
        throw ValidationError("bounding box needs y0 < y1");
    }
    if (!(box.confidence >= 0.0 && box.confidence <= 1.0)) {
        throw ValidationError("bounding box confidence outside [0,1]");
    }
}

namespace {

struct Line {
    std::size_t number;
    std::string_view text;
};

// Non-blank lines with their 1-based line numbers; CR stripped.
std::vector<Line> lines_of(std::string_view text) {
    std::vector<Line> out;
    std::size_t number = 0;
    for (auto piece : util::split(text, '\n')) {
        ++number;
        if (!piece.empty() && piece.back() == '\r') {
            piece.remove_suffix(1);
        }
        if (util::trim(piece).empty()) {
            continue;
        }
        out.push_back({number, piece});
    }
    return out;
}

double number_field(const json& object, const char* key) {
    const auto it = object.find(key);
    if (it == object.end() || !it->is_number()) {
        throw ValidationError(std::string("missing numeric field '") + key + "'");
    }
    return it->get<double>();
}

bool is_header(const json& object) {
    return object.is_object() && !object.contains("frame") &&
           (object.contains("video_id") || object.contains("fps"));
}

void apply_header(const json& object, FrameDetectionSeries& series) {
    if (auto it = object.find("video_id"); it != object.end()) {
        if (!it->is_string()) {
            throw ValidationError("video_id must be a string");
        }
        series.video_id = it->get<std::string>();
    }
    if (auto it = object.find("fps"); it != object.end()) {
        if (!it->is_number() || !(it->get<double>() > 0.0)) {
            throw ValidationError("fps must be a positive number");
        }
        series.fps = it->get<double>();
    }
    for (const char* key : {"width", "height"}) {
        if (auto it = object.find(key); it != object.end()) {
            if (!it->is_number_integer() || it->get<long long>() <= 0) {
                throw ValidationError(std::string(key) + " must be a positive integer");
            }
            (std::string_view(key) == "width" ? series.width : series.height) = it->get<int>();
        }
    }
}

FrameDetections parse_frame(const json& object) {
    if (!object.is_object()) {
        throw ValidationError("record is not a JSON object");
    }
    const auto frame = object.find("frame");
    if (frame == object.end() || !frame->is_number_integer()) {
        throw ValidationError("missing integer field 'frame'");
    }
    const auto boxes = object.find("boxes");
    if (boxes == object.end() || !boxes->is_array()) {
        throw ValidationError("missing array field 'boxes'");
    }
    FrameDetections out;
    out.frame = frame->get<std::int64_t>();
    for (const auto& b : *boxes) {
        if (!b.is_object()) {
            throw ValidationError("box is not a JSON object");
        }
        BoundingBox box{number_field(b, "x0"), number_field(b, "y0"), number_field(b, "x1"),
                        number_field(b, "y1"), number_field(b, "confidence")};
        validate(box);
        out.boxes.push_back(box);
    }
    return out;
}

Parsed<FrameDetectionSeries> parse_detections_impl(std::string_view text, std::string default_video_id,
                                                   bool strict) {
    Parsed<FrameDetectionSeries> result;
    result.value.video_id = std::move(default_video_id);
    bool first = true;
    for (const auto& line : lines_of(text)) {
        try {
            json object;
            try {
                object = json::parse(line.text);
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what());
            }
            if (first && is_header(object)) {
                first = false;
                apply_header(object, result.value);
                continue;
            }
            first = false;
            auto frame = parse_frame(object);
            if (!result.value.frames.empty() && frame.frame <= result.value.frames.back().frame) {
                throw ValidationError("frame index " + std::to_string(frame.frame) +
                                      " is not greater than previous index " +
                                      std::to_string(result.value.frames.back().frame));
            }
            result.value.frames.push_back(std::move(frame));
        } catch (const ValidationError& e) {
            if (strict) {
                throw ParseError(line.number, e.what());
            }
            result.issues.push_back({line.number, e.what()});
        }
    }
    return result;
}

void join_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += cells[i];
    }
    out += '\n';
}

std::vector<std::string> cells_of(std::string_view line) {
    std::vector<std::string> out;
    for (auto cell : util::split(line, ',')) {
        out.emplace_back(util::trim(cell));
    }
    return out;
}

struct PoseHeader {
    std::string scorer;
    std::vector<std::string> bodyparts;
    std::size_t arity = 0;
};

PoseHeader parse_pose_header(const std::vector<Line>& lines) {
    if (lines.size() < 3) {
        throw ParseError(lines.empty() ? 1 : lines.back().number, "expected three header rows");
    }
    const auto scorer = cells_of(lines[0].text);
    const auto parts = cells_of(lines[1].text);
    const auto coords = cells_of(lines[2].text);
    if (scorer.empty() || scorer[0] != "scorer") {
        throw ParseError(lines[0].number, "first header row must start with 'scorer'");
    }
    if (parts.empty() || parts[0] != "bodyparts") {
        throw ParseError(lines[1].number, "second header row must start with 'bodyparts'");
    }
    if (coords.empty() || coords[0] != "coords") {
        throw ParseError(lines[2].number, "third header row must start with 'coords'");
    }
    const std::size_t arity = parts.size();
    if (arity < 4 || (arity - 1) % 3 != 0) {
        throw ParseError(lines[1].number, "bodyparts row must hold one name per x,y,likelihood triplet");
    }
    if (scorer.size() != arity) {
        throw ParseError(lines[0].number, "scorer row arity does not match bodyparts row");
    }
    if (coords.size() != arity) {
        throw ParseError(lines[2].number, "coords row arity does not match bodyparts row");
    }

    PoseHeader header;
    header.scorer = scorer[1];
    header.arity = arity;
    static const char* kCoords[] = {"x", "y", "likelihood"};
    for (std::size_t p = 0; p < (arity - 1) / 3; ++p) {
        const std::size_t base = 1 + 3 * p;
        for (std::size_t c = 0; c < 3; ++c) {
            if (parts[base + c] != parts[base]) {
                throw ParseError(lines[1].number, "bodypart name must repeat for x, y and likelihood");
            }
            if (coords[base + c] != kCoords[c]) {
                throw ParseError(lines[2].number, "coords row must repeat x,y,likelihood");
            }
        }
        if (parts[base].empty()) {
            throw ParseError(lines[1].number, "empty bodypart name");
        }
        header.bodyparts.push_back(parts[base]);
    }
    return header;
}

Parsed<PoseSeries> parse_pose_impl(std::string_view text, std::string video_id, bool strict) {
    const auto lines = lines_of(text);
    const auto header = parse_pose_header(lines);

    Parsed<PoseSeries> result;
    auto& pose = result.value;
    pose.video_id = std::move(video_id);
    pose.scorer = header.scorer;
    pose.bodyparts = header.bodyparts;
    const std::size_t parts = header.bodyparts.size();

    for (std::size_t r = 3; r < lines.size(); ++r) {
        const auto& line = lines[r];
        try {
            const auto cells = cells_of(line.text);
            if (cells.size() != header.arity) {
                throw ValidationError("row has " + std::to_string(cells.size()) + " cells, header has " +
                                      std::to_string(header.arity));
            }
            const auto frame = util::parse_int(cells[0]);
            if (!frame) {
                throw ValidationError("frame index '" + cells[0] + "' is not an integer");
            }
            std::vector<PoseSample> row(parts);
            for (std::size_t p = 0; p < parts; ++p) {
                const auto x = util::parse_double(cells[1 + 3 * p]);
                const auto y = util::parse_double(cells[2 + 3 * p]);
                const auto l = util::parse_double(cells[3 + 3 * p]);
                if (l && std::isfinite(*l) && (*l < 0.0 || *l > 1.0)) {
                    throw ValidationError("likelihood " + cells[3 + 3 * p] + " outside [0,1]");
                }
                if (x && y && l && std::isfinite(*x) && std::isfinite(*y) && std::isfinite(*l)) {
                    row[p] = Keypoint{*x, *y, *l};
                }
            }
            pose.frame_numbers.push_back(*frame);
            pose.samples.insert(pose.samples.end(), row.begin(), row.end());
        } catch (const ValidationError& e) {
            if (strict) {
                throw ParseError(line.number, e.what());
            }
            result.issues.push_back({line.number, e.what()});
        }
    }
    if (pose.frame_numbers.empty()) {
        throw ParseError(lines.back().number, "pose table has no frames");
    }
    return result;
}

} // namespace

FrameDetectionSeries parse_detections(std::string_view text, std::string default_video_id) {
    return parse_detections_impl(text, std::move(default_video_id), true).value;
}

Parsed<FrameDetectionSeries> parse_detections_lenient(std::string_view text, std::string default_video_id) {
    return parse_detections_impl(text, std::move(default_video_id), false);
}

std::string serialize_detections(const FrameDetectionSeries& series) {
    std::string out;
    ordered_json header;
    header["video_id"] = series.video_id;
    header["fps"] = series.fps;
    if (series.width) {
        header["width"] = *series.width;
    }
    if (series.height) {
        header["height"] = *series.height;
    }
    out += header.dump() + "\n";
    for (const auto& frame : series.frames) {
        ordered_json line;
        line["frame"] = frame.frame;
        line["boxes"] = ordered_json::array();
        for (const auto& b : frame.boxes) {
            ordered_json box;
            box["x0"] = b.x0;
            box["y0"] = b.y0;
            box["x1"] = b.x1;
            box["y1"] = b.y1;
            box["confidence"] = b.confidence;
            line["boxes"].push_back(std::move(box));
        }
        out += line.dump() + "\n";
    }
    return out;
}

PoseSeries parse_pose_csv(std::string_view text, std::string video_id) {
    return parse_pose_impl(text, std::move(video_id), true).value;
}

Parsed<PoseSeries> parse_pose_csv_lenient(std::string_view text, std::string video_id) {
    return parse_pose_impl(text, std::move(video_id), false);
}

std::string serialize_pose_csv(const PoseSeries& pose) {
    std::string out;
    std::vector<std::string> scorer{"scorer"}, parts{"bodyparts"}, coords{"coords"};
    for (const auto& name : pose.bodyparts) {
        for (const char* c : {"x", "y", "likelihood"}) {
            scorer.push_back(pose.scorer);
            parts.push_back(name);
            coords.emplace_back(c);
        }
    }
    join_line(out, scorer);
    join_line(out, parts);
    join_line(out, coords);
    for (std::size_t f = 0; f < pose.frame_count(); ++f) {
        std::vector<std::string> row{std::to_string(pose.frame_numbers[f])};
        for (std::size_t p = 0; p < pose.part_count(); ++p) {
            const auto& s = pose.at(f, p);
            if (s) {
                row.push_back(util::format_double(s->x));
                row.push_back(util::format_double(s->y));
                row.push_back(util::format_double(s->likelihood));
            } else {
                row.insert(row.end(), 3, std::string());
            }
        }
        join_line(out, row);
    }
    return out;
}

FrameDetectionSeries load_detections(const std::filesystem::path& path) {
    try {
        return parse_detections(util::read_file(path), path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

PoseSeries load_pose_csv(const std::filesystem::path& path) {
    try {
        return parse_pose_csv(util::read_file(path), path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

std::string frame_file_stem(std::int64_t index) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%06lld", static_cast<long long>(index));
    return buffer;
}

std::optional<std::filesystem::path> frame_path(const std::filesystem::path& directory, std::int64_t index) {
    const auto stem = frame_file_stem(index);
    for (const char* ext : {".png", ".pgm"}) {
        auto candidate = directory / (stem + ext);
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    return std::nullopt;
}

FrameStack load_frames(const std::filesystem::path& directory, std::int64_t first, std::int64_t last) {
    if (first < 0 || last < first) {
        throw ValidationError("invalid frame range [" + std::to_string(first) + ", " + std::to_string(last) + "]");
    }
    FrameStack stack;
    stack.video_id = directory.filename().string();
    for (std::int64_t i = first; i <= last; ++i) {
        const auto path = frame_path(directory, i);
        if (!path) {
            throw Error(directory.string() + ": missing frame " + std::to_string(i));
        }
        auto image = read_image(*path);
        if (!stack.frames.empty() &&
            (image.width != stack.frames.front().width || image.height != stack.frames.front().height)) {
            throw Error(path->string() + ": frame dimensions differ from first frame");
        }
        stack.frames.push_back(std::move(image));
    }
    return stack;
}

} // namespace ethomap::ingest
