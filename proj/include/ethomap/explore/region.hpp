#pragma once

#include "ethomap/embed/umap.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ethomap::explore {

/// Rectangle (inclusive bounds) or disc (distance <= radius) in embedding coordinates.
struct Region {
    enum class Kind { Rect, Disc };
    Kind kind = Kind::Rect;
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    double cx = 0.0, cy = 0.0, radius = 0.0;

    static Region rect(double x0, double x1, double y0, double y1);
    static Region disc(double cx, double cy, double r);

    void validate() const;
    bool contains(double x, double y) const;

    friend bool operator==(const Region&, const Region&) = default;
};

/// {"rect":[x0,x1,y0,y1]} or {"disc":[cx,cy,r]}; ValidationError when malformed.
Region region_from_json(const nlohmann::json& value);
nlohmann::ordered_json region_to_json(const Region& region);

/// Comma-separated flag values: "x0,x1,y0,y1" and "cx,cy,r".
Region parse_rect(std::string_view text);
Region parse_disc(std::string_view text);

struct QueryResult {
    std::vector<std::size_t> ids;                  // ascending window ids
    std::map<std::string, std::size_t> per_video;  // sorted by video id
};

QueryResult query_region(const embed::EmbeddingModel& model, const Region& region);

/// Canonical JSON text shared by the CLI and the HTTP API.
std::string query_to_json(const QueryResult& result);

} // namespace ethomap::explore
