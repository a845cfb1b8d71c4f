#pragma once

#include "ethomap/embed/coordinates.hpp"
#include "ethomap/windows.hpp"

#include <cstdint>
#include <vector>

namespace ethomap::embed {

struct KMeansResult {
    std::vector<int> labels;
    Coordinates centroids;
    double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; best of `restarts` by inertia.
KMeansResult kmeans(const Coordinates& points, std::size_t k, std::uint64_t seed, int restarts = 10,
                    int max_iterations = 300);

/// Fraction of points whose cluster's majority truth label matches their own.
double purity(const std::vector<int>& clusters, const std::vector<int>& truth);

inline constexpr int kNoise = -1;

struct DbscanOptions {
    double eps = 0.0;  // 0 picks auto_eps
    std::size_t min_points = 10;
};

/// Twice the median distance to the min_points-th nearest neighbor.
double auto_eps(const Coordinates& points, std::size_t min_points);

/// Density clusters numbered from 0 in discovery order; kNoise for noise points.
std::vector<int> dbscan(const Coordinates& points, const DbscanOptions& options);

/// Mean silhouette over non-noise points; 0 when fewer than two clusters remain.
/// Points alone in their cluster score 0.
double silhouette(const Coordinates& points, const std::vector<int>& labels);

/// Trustworthiness of the low-dimensional neighborhoods (k nearest) against the data.
double trustworthiness(const windows::DataMatrix& data, const Coordinates& embedded, std::size_t k = 5);

} // namespace ethomap::embed
