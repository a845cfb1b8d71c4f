#include "ethomap/embed/knn.hpp"

#include "ethomap/error.hpp"
#include "ethomap/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace ethomap::embed {

double euclidean(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

namespace {

using Candidate = std::pair<double, std::uint32_t>;

void take_nearest(std::vector<Candidate>& candidates, std::size_t k, std::uint32_t* ids, double* dists) {
    // Pairs order by distance, then id.
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k - 1), candidates.end());
    std::sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j = 0; j < k; ++j) {
        dists[j] = candidates[j].first;
        ids[j] = candidates[j].second;
    }
}

NeighborGraph search(const DataMatrix& reference, const DataMatrix& queries, std::size_t k, bool exclude_self,
                     unsigned threads) {
    if (reference.rows > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("too many points for 32-bit neighbor ids");
    }
    NeighborGraph graph;
    graph.n = queries.rows;
    graph.k = k;
    graph.ids.resize(queries.rows * k);
    graph.distances.resize(queries.rows * k);
    util::parallel_for(queries.rows, threads, [&](std::size_t i) {
        thread_local std::vector<Candidate> candidates;
        candidates.clear();
        const auto q = queries.row(i);
        for (std::size_t j = 0; j < reference.rows; ++j) {
            if (exclude_self && j == i) {
                continue;
            }
            const double d = euclidean(q, reference.row(j));
            if (!std::isfinite(d)) {
                throw Error("non-finite distance between rows " + std::to_string(i) + " and " + std::to_string(j));
            }
            candidates.emplace_back(d, static_cast<std::uint32_t>(j));
        }
        take_nearest(candidates, k, graph.ids.data() + i * k, graph.distances.data() + i * k);
    });
    return graph;
}

} // namespace

NeighborGraph knn_exact(const DataMatrix& data, std::size_t k, unsigned threads) {
    if (k == 0) {
        throw ValidationError("k must be at least 1");
    }
    if (k >= data.rows) {
        throw ValidationError("k (" + std::to_string(k) + ") must be smaller than the number of points (" +
                              std::to_string(data.rows) + ")");
    }
    return search(data, data, k, true, threads);
}

NeighborGraph knn_query(const DataMatrix& reference, const DataMatrix& queries, std::size_t k, unsigned threads) {
    if (k == 0 || k > reference.rows) {
        throw ValidationError("k must lie in [1, reference size]");
    }
    if (queries.cols != reference.cols) {
        throw ValidationError("query dimensionality " + std::to_string(queries.cols) + " does not match " +
                              std::to_string(reference.cols));
    }
    return search(reference, queries, k, false, threads);
}

} // namespace ethomap::embed
