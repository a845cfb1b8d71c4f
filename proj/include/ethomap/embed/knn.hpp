#pragma once

#include "ethomap/windows.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ethomap::embed {

using windows::DataMatrix;

/// k nearest neighbors per point, ascending by distance (ties: lower id first).
struct NeighborGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> ids;  // n * k
    std::vector<double> distances;   // n * k, euclidean

    std::span<const std::uint32_t> neighbors(std::size_t i) const { return {ids.data() + i * k, k}; }
    std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }
};

double euclidean(std::span<const float> a, std::span<const float> b);

/// Exact kNN within `data`, excluding each point itself. Requires k < rows.
NeighborGraph knn_exact(const DataMatrix& data, std::size_t k, unsigned threads = 1);

/// Exact kNN of each row of `queries` among the rows of `reference` (no self exclusion).
NeighborGraph knn_query(const DataMatrix& reference, const DataMatrix& queries, std::size_t k, unsigned threads = 1);

} // namespace ethomap::embed
