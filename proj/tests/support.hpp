#pragma once

// Test helpers and reference implementations. The oracles here are written
// independently of the library code they check: different formulations,
// no shared helpers, brute force where that is affordable.

#include "ethomap/embed/coordinates.hpp"
#include "ethomap/types.hpp"
#include "ethomap/windows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ethomap::oracle {

/// Fresh directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::string pattern = (std::filesystem::temp_directory_path() / "ethomap-test-XXXXXX").string();
        if (mkdtemp(pattern.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline windows::DataMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    windows::DataMatrix m(rows, cols);
    for (auto& v : m.values) {
        v = normal(rng);
    }
    return m;
}

// ---- kNN ---------------------------------------------------------------

struct BruteNeighbors {
    std::vector<std::vector<std::uint32_t>> ids;
    std::vector<std::vector<double>> distances;
};

/// Full sort of every pairwise distance, ties by lower index, self excluded.
inline BruteNeighbors brute_knn(const windows::DataMatrix& data, std::size_t k) {
    BruteNeighbors out;
    for (std::size_t i = 0; i < data.rows; ++i) {
        std::vector<std::pair<double, std::uint32_t>> all;
        for (std::size_t j = 0; j < data.rows; ++j) {
            if (j == i) {
                continue;
            }
            long double s = 0;
            for (std::size_t c = 0; c < data.cols; ++c) {
                const long double d = static_cast<long double>(data.at(i, c)) - data.at(j, c);
                s += d * d;
            }
            all.emplace_back(static_cast<double>(std::sqrt(s)), static_cast<std::uint32_t>(j));
        }
        std::sort(all.begin(), all.end());
        out.ids.emplace_back();
        out.distances.emplace_back();
        for (std::size_t t = 0; t < k; ++t) {
            out.ids.back().push_back(all[t].second);
            out.distances.back().push_back(all[t].first);
        }
    }
    return out;
}

// ---- fuzzy calibration ---------------------------------------------------

inline double membership_sum(const std::vector<double>& distances, double rho, double sigma) {
    double s = 0.0;
    for (double d : distances) {
        s += std::exp(-std::max(0.0, d - rho) / sigma);
    }
    return s;
}

/// sigma solving sum exp(-(d - rho)+ / sigma) = log2(k), bisected on log(sigma).
inline double bisect_sigma(const std::vector<double>& distances, double rho) {
    const double target = std::log2(static_cast<double>(distances.size()));
    double lo = std::log(1e-12);
    double hi = std::log(1e6);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (membership_sum(distances, rho, std::exp(mid)) > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

// ---- curve fit -----------------------------------------------------------

/// Least-squares fit of 1/(1 + a d^(2b)) to the min_dist target by nested grid search.
inline std::pair<double, double> grid_fit_ab(double min_dist, double spread = 1.0) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 300; ++i) {
        const double x = 3.0 * spread * i / 299.0;
        xs.push_back(x);
        ys.push_back(x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread));
    }
    auto sse = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double f = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b));
            s += (f - ys[i]) * (f - ys[i]);
        }
        return s;
    };
    double best_a = 0.5;
    double best_b = 0.5;
    double best = std::numeric_limits<double>::infinity();
    auto scan = [&](double a0, double a1, double b0, double b1, double step) {
        for (double a = a0; a <= a1 + 1e-12; a += step) {
            for (double b = b0; b <= b1 + 1e-12; b += step) {
                const double s = sse(a, b);
                if (s < best) {
                    best = s;
                    best_a = a;
                    best_b = b;
                }
            }
        }
    };
    scan(0.5, 3.0, 0.5, 2.0, 0.02);
    const double ca = best_a;
    const double cb = best_b;
    scan(std::max(0.5, ca - 0.03), std::min(3.0, ca + 0.03), std::max(0.5, cb - 0.03), std::min(2.0, cb + 0.03),
         0.0005);
    return {best_a, best_b};
}

// ---- natural cubic spline --------------------------------------------------

/// Natural cubic spline in slope (Hermite) form: the n knot slopes solve a dense
/// linear system by Gaussian elimination with partial pivoting.
class SlopeSpline {
public:
    SlopeSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        slopes_.assign(n, 0.0);
        if (n == 2) {
            slopes_[0] = slopes_[1] = (y_[1] - y_[0]) / (x_[1] - x_[0]);
            return;
        }
        std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
        auto h = [&](std::size_t i) { return x_[i + 1] - x_[i]; };
        auto delta = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h(i); };
        // S''(x_0) = 0 and S''(x_{n-1}) = 0 written in terms of slopes.
        a[0][0] = 2.0;
        a[0][1] = 1.0;
        a[0][n] = 3.0 * delta(0);
        a[n - 1][n - 2] = 1.0;
        a[n - 1][n - 1] = 2.0;
        a[n - 1][n] = 3.0 * delta(n - 2);
        // Second-derivative continuity at interior knots.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            a[i][i - 1] = 1.0 / h(i - 1);
            a[i][i] = 2.0 / h(i - 1) + 2.0 / h(i);
            a[i][i + 1] = 1.0 / h(i);
            a[i][n] = 3.0 * (delta(i - 1) / h(i - 1) + delta(i) / h(i));
        }
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < n; ++r) {
                if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                    pivot = r;
                }
            }
            std::swap(a[col], a[pivot]);
            for (std::size_t r = 0; r < n; ++r) {
                if (r == col || a[r][col] == 0.0) {
                    continue;
                }
                const double f = a[r][col] / a[col][col];
                for (std::size_t c = col; c <= n; ++c) {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            slopes_[i] = a[i][n] / a[i][i];
        }
    }

    double operator()(double x) const {
        std::size_t i = 0;
        while (i + 2 < x_.size() && x > x_[i + 1]) {
            ++i;
        }
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
               (t3 - t2) * h * slopes_[i + 1];
    }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slopes_;
};

/// Spline oracle applied to a gappy track: constant fill outside the knot range.
inline std::vector<Point2> oracle_cubic_fill(const Track1P& track) {
    std::vector<double> t;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (track[i]) {
            t.push_back(static_cast<double>(i));
            xs.push_back(track[i]->x);
            ys.push_back(track[i]->y);
        }
    }
    std::vector<Point2> out(track.size());
    if (t.size() == 1) {
        std::fill(out.begin(), out.end(), Point2{xs[0], ys[0]});
        return out;
    }
    const SlopeSpline sx(t, xs);
    const SlopeSpline sy(t, ys);
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (track[i]) {
            out[i] = *track[i];
        } else if (static_cast<double>(i) < t.front()) {
            out[i] = Point2{xs.front(), ys.front()};
        } else if (static_cast<double>(i) > t.back()) {
            out[i] = Point2{xs.back(), ys.back()};
        } else {
            out[i] = Point2{sx(static_cast<double>(i)), sy(static_cast<double>(i))};
        }
    }
    return out;
}

// ---- clustering ------------------------------------------------------------

/// Fraction of points whose cluster's majority label equals their own label.
inline double majority_purity(const std::vector<int>& clusters, const std::vector<int>& truth) {
    std::map<int, std::map<int, std::size_t>> table;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        ++table[clusters[i]][truth[i]];
    }
    std::size_t hits = 0;
    for (const auto& [cluster, counts] : table) {
        std::size_t best = 0;
        for (const auto& [label, count] : counts) {
            best = std::max(best, count);
        }
        hits += best;
    }
    return static_cast<double>(hits) / static_cast<double>(clusters.size());
}

/// Share of points closest (2-D euclidean) to the centroid of their own label.
inline double nearest_centroid_rate(const embed::Coordinates& points, const std::vector<int>& truth,
                                    const std::map<int, Point2>& centroids) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < points.rows; ++i) {
        const Point2 p{points.at(i, 0), points.at(i, 1)};
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [label, c] : centroids) {
            const double d = distance(p, c);
            if (d < best_d) {
                best_d = d;
                best = label;
            }
        }
        hits += best == truth[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(points.rows);
}

inline std::map<int, Point2> label_centroids(const embed::Coordinates& points, const std::vector<int>& truth) {
    std::map<int, std::pair<Point2, std::size_t>> acc;
    for (std::size_t i = 0; i < points.rows; ++i) {
        auto& [sum, n] = acc[truth[i]];
        sum.x += points.at(i, 0);
        sum.y += points.at(i, 1);
        ++n;
    }
    std::map<int, Point2> out;
    for (const auto& [label, entry] : acc) {
        out[label] = Point2{entry.first.x / entry.second, entry.first.y / entry.second};
    }
    return out;
}

} // namespace ethomap::oracle
