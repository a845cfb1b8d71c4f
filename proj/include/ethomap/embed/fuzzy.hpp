#pragma once

#include "ethomap/embed/knn.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ethomap::embed {

inline constexpr double kSigmaMin = 1e-10;
inline constexpr double kSigmaMax = 1e4;
inline constexpr int kSigmaIterations = 64;

/// Local scale of one point: rho is the smallest positive neighbor distance
/// (0 if none) and sigma solves sum_j exp(-max(0, d_j - rho) / sigma) = log2(k).
struct LocalScale {
    double rho = 0.0;
    double sigma = 1.0;
};

/// When the row-sum does not depend on sigma (every neighbor at distance <= rho)
/// all weights are 1 and sigma sits at kSigmaMax.
LocalScale calibrate_row(std::span<const double> distances);

double membership(double distance, LocalScale scale);

/// Symmetric weighted graph in CSR form; both directions of every edge are stored.
struct FuzzyGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> rho;
    std::vector<double> sigma;
    std::vector<std::size_t> offsets;     // n + 1
    std::vector<std::uint32_t> columns;   // sorted per row
    std::vector<double> weights;          // in (0, 1]

    std::size_t edge_count() const { return columns.size(); }
    /// Weight of (i, j), 0 when absent.
    double weight(std::size_t i, std::size_t j) const;
};

/// Directed memberships exp(-max(0, d - rho)/sigma) combined as u + v - u*v.
FuzzyGraph calibrate_fuzzy(const NeighborGraph& graph);

} // namespace ethomap::embed
