#include "ethomap/explore/region.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <cmath>

namespace ethomap::explore {

Region Region::rect(double x0, double x1, double y0, double y1) {
    Region r;
    r.kind = Kind::Rect;
    r.x_min = x0;
    r.x_max = x1;
    r.y_min = y0;
    r.y_max = y1;
    return r;
}

Region Region::disc(double cx, double cy, double radius) {
    Region r;
    r.kind = Kind::Disc;
    r.cx = cx;
    r.cy = cy;
    r.radius = radius;
    return r;
}

void Region::validate() const {
    if (kind == Kind::Rect) {
        if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
            throw ValidationError("rectangle bounds must be finite");
        }
        if (!(x_min < x_max) || !(y_min < y_max)) {
            throw ValidationError("rectangle needs x_min < x_max and y_min < y_max");
        }
    } else {
        if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(radius) || !(radius > 0.0)) {
            throw ValidationError("disc needs a finite center and a positive radius");
        }
    }
}

bool Region::contains(double x, double y) const {
    if (kind == Kind::Rect) {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    return std::hypot(x - cx, y - cy) <= radius;
}

namespace {

std::vector<double> numbers(const nlohmann::json& value, std::size_t count, const char* what) {
    if (!value.is_array() || value.size() != count) {
        throw ValidationError(std::string(what) + " needs " + std::to_string(count) + " numbers");
    }
    std::vector<double> out;
    for (const auto& v : value) {
        if (!v.is_number()) {
            throw ValidationError(std::string(what) + " values must be numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<double> flag_numbers(std::string_view text, std::size_t count, const char* what) {
    std::vector<double> out;
    for (auto cell : util::split(text, ',')) {
        const auto v = util::parse_double(util::trim(cell));
        if (!v) {
            throw ValidationError(std::string(what) + ": not a number: '" + std::string(cell) + "'");
        }
        out.push_back(*v);
    }
    if (out.size() != count) {
        throw ValidationError(std::string(what) + " needs " + std::to_string(count) + " comma-separated numbers");
    }
    return out;
}

} // namespace

Region region_from_json(const nlohmann::json& value) {
    if (!value.is_object()) {
        throw ValidationError("region must be a JSON object");
    }
    Region region;
    if (value.contains("rect") && !value.contains("disc")) {
        const auto v = numbers(value.at("rect"), 4, "rect");
        region = Region::rect(v[0], v[1], v[2], v[3]);
    } else if (value.contains("disc") && !value.contains("rect")) {
        const auto v = numbers(value.at("disc"), 3, "disc");
        region = Region::disc(v[0], v[1], v[2]);
    } else {
        throw ValidationError("region needs exactly one of \"rect\" or \"disc\"");
    }
    region.validate();
    return region;
}

nlohmann::ordered_json region_to_json(const Region& region) {
    nlohmann::ordered_json out;
    if (region.kind == Region::Kind::Rect) {
        out["rect"] = {region.x_min, region.x_max, region.y_min, region.y_max};
    } else {
        out["disc"] = {region.cx, region.cy, region.radius};
    }
    return out;
}

Region parse_rect(std::string_view text) {
    const auto v = flag_numbers(text, 4, "--rect");
    Region r = Region::rect(v[0], v[1], v[2], v[3]);
    r.validate();
    return r;
}

Region parse_disc(std::string_view text) {
    const auto v = flag_numbers(text, 3, "--disc");
    Region r = Region::disc(v[0], v[1], v[2]);
    r.validate();
    return r;
}

QueryResult query_region(const embed::EmbeddingModel& model, const Region& region) {
    region.validate();
    if (model.coords.dims < 2) {
        throw ValidationError("region queries need a 2-D embedding");
    }
    QueryResult result;
    for (std::size_t i = 0; i < model.coords.rows; ++i) {
        if (region.contains(model.coords.at(i, 0), model.coords.at(i, 1))) {
            result.ids.push_back(i);
            if (i < model.provenance.size()) {
                ++result.per_video[model.provenance[i].video_id];
            }
        }
    }
    return result;
}

std::string query_to_json(const QueryResult& result) {
    nlohmann::ordered_json out;
    out["count"] = result.ids.size();
    out["ids"] = result.ids;
    nlohmann::ordered_json per_video = nlohmann::ordered_json::object();
    for (const auto& [video, count] : result.per_video) {
        per_video[video] = count;
    }
    out["per_video"] = per_video;
    return out.dump();
}

} // namespace ethomap::explore
