#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace ethomap {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Per-frame position of one bodypart; nullopt marks a missing observation.
using Track1P = std::vector<std::optional<Point2>>;

} // namespace ethomap
