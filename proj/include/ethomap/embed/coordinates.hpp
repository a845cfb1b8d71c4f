#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ethomap::embed {

/// Row-major low-dimensional coordinates, one row per point.
struct Coordinates {
    std::size_t rows = 0;
    std::size_t dims = 2;
    std::vector<double> values;

    Coordinates() = default;
    Coordinates(std::size_t r, std::size_t d) : rows(r), dims(d), values(r * d, 0.0) {}

    double& at(std::size_t i, std::size_t d) { return values[i * dims + d]; }
    double at(std::size_t i, std::size_t d) const { return values[i * dims + d]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dims, dims}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * dims, dims}; }

    friend bool operator==(const Coordinates&, const Coordinates&) = default;
};

} // namespace ethomap::embed
