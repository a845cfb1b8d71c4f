#include "ethomap/embed/cluster.hpp"

#include "ethomap/embed/knn.hpp"
#include "ethomap/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace ethomap::embed {

namespace {

double squared(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

KMeansResult lloyd(const Coordinates& points, std::size_t k, std::mt19937_64& rng, int max_iterations) {
    const std::size_t n = points.rows;
    KMeansResult result;
    result.centroids = Coordinates(k, points.dims);

    // k-means++ seeding.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng() % n);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t chosen = first;
        if (c > 0) {
            const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
            if (total > 0.0) {
                std::uniform_real_distribution<double> pick(0.0, total);
                double target = pick(rng);
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    target -= nearest[i];
                    if (target <= 0.0 && nearest[i] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = static_cast<std::size_t>(rng() % n);
            }
        }
        std::copy_n(points.row(chosen).begin(), points.dims, result.centroids.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared(points.row(i), result.centroids.row(c)));
        }
    }

    result.labels.assign(n, -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared(points.row(i), result.centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (result.labels[i] != best) {
                result.labels[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        Coordinates sums(k, points.dims);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(result.labels[i]);
            ++counts[c];
            for (std::size_t d = 0; d < points.dims; ++d) {
                sums.at(c, d) += points.at(i, d);
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its centroid
            }
            for (std::size_t d = 0; d < points.dims; ++d) {
                result.centroids.at(c, d) = sums.at(c, d) / static_cast<double>(counts[c]);
            }
        }
    }
    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        result.inertia += squared(points.row(i), result.centroids.row(static_cast<std::size_t>(result.labels[i])));
    }
    return result;
}

} // namespace

KMeansResult kmeans(const Coordinates& points, std::size_t k, std::uint64_t seed, int restarts, int max_iterations) {
    if (k == 0 || k > points.rows) {
        throw ValidationError("k-means needs 1 <= k <= number of points");
    }
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        KMeansResult run = lloyd(points, k, rng, max_iterations);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return best;
}

double purity(const std::vector<int>& clusters, const std::vector<int>& truth) {
    if (clusters.size() != truth.size()) {
        throw ValidationError("cluster and truth label counts differ");
    }
    if (clusters.empty()) {
        return 0.0;
    }
    std::map<int, std::map<int, std::size_t>> table;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        ++table[clusters[i]][truth[i]];
    }
    std::size_t agree = 0;
    for (const auto& [cluster, counts] : table) {
        std::size_t best = 0;
        for (const auto& [label, count] : counts) {
            best = std::max(best, count);
        }
        agree += best;
    }
    return static_cast<double>(agree) / static_cast<double>(clusters.size());
}

double auto_eps(const Coordinates& points, std::size_t min_points) {
    const std::size_t n = points.rows;
    if (n < 2) {
        return 1.0;
    }
    const std::size_t kth = std::min(min_points, n - 1);
    std::vector<double> kdist(n);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                row[m++] = squared(points.row(i), points.row(j));
            }
        }
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kth - 1),
                         row.begin() + static_cast<std::ptrdiff_t>(m));
        kdist[i] = std::sqrt(row[kth - 1]);
    }
    std::nth_element(kdist.begin(), kdist.begin() + static_cast<std::ptrdiff_t>(n / 2), kdist.end());
    const double median = kdist[n / 2];
    return median > 0.0 ? 2.0 * median : 1e-9;
}

std::vector<int> dbscan(const Coordinates& points, const DbscanOptions& options) {
    const std::size_t n = points.rows;
    const double eps = options.eps > 0.0 ? options.eps : auto_eps(points, options.min_points);
    const double eps2 = eps * eps;
    std::vector<std::vector<std::uint32_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (squared(points.row(i), points.row(j)) <= eps2) {
                neighbors[i].push_back(static_cast<std::uint32_t>(j));  // includes i itself
            }
        }
    }
    std::vector<int> labels(n, kNoise);
    std::vector<bool> visited(n, false);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i] || neighbors[i].size() < options.min_points) {
            continue;
        }
        const int cluster = next++;
        std::vector<std::size_t> frontier{i};
        visited[i] = true;
        labels[i] = cluster;
        while (!frontier.empty()) {
            const std::size_t p = frontier.back();
            frontier.pop_back();
            if (neighbors[p].size() < options.min_points) {
                continue;  // border point
            }
            for (std::uint32_t q : neighbors[p]) {
                if (labels[q] == kNoise) {
                    labels[q] = cluster;
                }
                if (!visited[q]) {
                    visited[q] = true;
                    frontier.push_back(q);
                }
            }
        }
    }
    return labels;
}

double silhouette(const Coordinates& points, const std::vector<int>& labels) {
    if (labels.size() != points.rows) {
        throw ValidationError("label count does not match point count");
    }
    std::map<int, std::size_t> sizes;
    for (int l : labels) {
        if (l != kNoise) {
            ++sizes[l];
        }
    }
    if (sizes.size() < 2) {
        return 0.0;
    }
    std::map<int, std::size_t> slot;
    for (const auto& [l, size] : sizes) {
        slot.emplace(l, slot.size());
    }
    double total = 0.0;
    std::size_t counted = 0;
    std::vector<double> sums(sizes.size());
    for (std::size_t i = 0; i < points.rows; ++i) {
        if (labels[i] == kNoise) {
            continue;
        }
        ++counted;
        if (sizes[labels[i]] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < points.rows; ++j) {
            if (j != i && labels[j] != kNoise) {
                sums[slot[labels[j]]] += std::sqrt(squared(points.row(i), points.row(j)));
            }
        }
        const std::size_t own = slot[labels[i]];
        const double a = sums[own] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [l, s] : slot) {
            if (s != own) {
                b = std::min(b, sums[s] / static_cast<double>(sizes[l]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
}

double trustworthiness(const windows::DataMatrix& data, const Coordinates& embedded, std::size_t k) {
    const std::size_t n = data.rows;
    if (embedded.rows != n) {
        throw ValidationError("embedding and data sizes differ");
    }
    if (k < 1 || 2 * n < 3 * k + 2) {
        throw ValidationError("trustworthiness needs k < n / 2");
    }
    std::vector<std::pair<double, std::uint32_t>> order(n - 1);
    std::vector<std::size_t> rank(n);
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                order[m++] = {euclidean(data.row(i), data.row(j)), static_cast<std::uint32_t>(j)};
            }
        }
        std::sort(order.begin(), order.end());
        for (std::size_t r = 0; r < order.size(); ++r) {
            rank[order[r].second] = r + 1;
        }
        m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                order[m++] = {squared(embedded.row(i), embedded.row(j)), static_cast<std::uint32_t>(j)};
            }
        }
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t high_rank = rank[order[r].second];
            if (high_rank > k) {
                penalty += static_cast<double>(high_rank - k);
            }
        }
    }
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

} // namespace ethomap::embed
