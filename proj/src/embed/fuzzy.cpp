#include "ethomap/embed/fuzzy.hpp"

#include "ethomap/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ethomap::embed {

namespace {

double row_sum(std::span<const double> distances, double rho, double sigma) {
    double sum = 0.0;
    for (double d : distances) {
        sum += std::exp(-std::max(0.0, d - rho) / sigma);
    }
    return sum;
}

} // namespace

LocalScale calibrate_row(std::span<const double> distances) {
    LocalScale scale;
    scale.rho = 0.0;
    for (double d : distances) {
        if (!std::isfinite(d) || d < 0.0) {
            throw Error("neighbor distances must be finite and non-negative");
        }
        if (d > 0.0 && (scale.rho == 0.0 || d < scale.rho)) {
            scale.rho = d;
        }
    }
    const bool sigma_free = std::all_of(distances.begin(), distances.end(), [&](double d) { return d <= scale.rho; });
    if (sigma_free) {
        scale.sigma = kSigmaMax;
        return scale;
    }

    const double target = std::log2(static_cast<double>(distances.size()));
    double lo = kSigmaMin;
    double hi = kSigmaMax;
    for (int it = 0; it < kSigmaIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (row_sum(distances, scale.rho, mid) > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    scale.sigma = 0.5 * (lo + hi);
    return scale;
}

double membership(double distance, LocalScale scale) {
    return std::exp(-std::max(0.0, distance - scale.rho) / scale.sigma);
}

double FuzzyGraph::weight(std::size_t i, std::size_t j) const {
    const auto begin = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
    const auto end = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
    const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
    return it != end && *it == j ? weights[static_cast<std::size_t>(it - columns.begin())] : 0.0;
}

FuzzyGraph calibrate_fuzzy(const NeighborGraph& graph) {
    FuzzyGraph fuzzy;
    fuzzy.n = graph.n;
    fuzzy.k = graph.k;
    fuzzy.rho.resize(graph.n);
    fuzzy.sigma.resize(graph.n);

    // Directed memberships, keyed (row, column).
    std::vector<std::map<std::uint32_t, double>> directed(graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
        const auto scale = calibrate_row(graph.dists(i));
        fuzzy.rho[i] = scale.rho;
        fuzzy.sigma[i] = scale.sigma;
        const auto ids = graph.neighbors(i);
        const auto dists = graph.dists(i);
        for (std::size_t j = 0; j < graph.k; ++j) {
            directed[i][ids[j]] = membership(dists[j], scale);
        }
    }

    std::vector<std::map<std::uint32_t, double>> symmetric(graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (const auto& [j, u] : directed[i]) {
            const auto back = directed[j].find(static_cast<std::uint32_t>(i));
            const double v = back == directed[j].end() ? 0.0 : back->second;
            // Computed from both ends with the same operand order so w_ij == w_ji bit for bit.
            const double lo = std::min(u, v);
            const double hi = std::max(u, v);
            const double w = (hi + lo) - hi * lo;
            if (w > 0.0) {
                symmetric[i][j] = w;
                symmetric[j][static_cast<std::uint32_t>(i)] = w;
            }
        }
    }

    fuzzy.offsets.assign(graph.n + 1, 0);
    for (std::size_t i = 0; i < graph.n; ++i) {
        fuzzy.offsets[i + 1] = fuzzy.offsets[i] + symmetric[i].size();
        for (const auto& [j, w] : symmetric[i]) {
            fuzzy.columns.push_back(j);
            fuzzy.weights.push_back(std::min(1.0, w));
        }
    }
    return fuzzy;
}

} // namespace ethomap::embed
