#include "ethomap/embed/cluster.hpp"
#include "ethomap/embed/curve.hpp"
#include "ethomap/embed/fuzzy.hpp"
#include "ethomap/embed/knn.hpp"
#include "ethomap/embed/layout.hpp"
#include "ethomap/embed/pca.hpp"
#include "ethomap/embed/sweep.hpp"
#include "ethomap/embed/umap.hpp"
#include "ethomap/error.hpp"
#include "ethomap/synth.hpp"
#include "ethomap/util.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace ethomap;
using namespace ethomap::embed;
using windows::DataMatrix;

namespace {

DataMatrix matrix_of(const std::vector<std::vector<float>>& rows) {
    DataMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

// Hand-built symmetric graph from an undirected edge list.
FuzzyGraph graph_of(std::size_t n, const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges) {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
    for (const auto& [i, j, w] : edges) {
        rows[i].emplace_back(j, w);
        rows[j].emplace_back(i, w);
    }
    FuzzyGraph g;
    g.n = n;
    g.rho.assign(n, 0.0);
    g.sigma.assign(n, 1.0);
    g.offsets.push_back(0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        for (const auto& [j, w] : r) {
            g.columns.push_back(j);
            g.weights.push_back(w);
        }
        g.offsets.push_back(g.columns.size());
    }
    return g;
}

double mean_radius(const Coordinates& c, std::size_t begin, std::size_t end, Point2& centroid) {
    centroid = {0, 0};
    for (std::size_t i = begin; i < end; ++i) {
        centroid.x += c.at(i, 0);
        centroid.y += c.at(i, 1);
    }
    centroid.x /= static_cast<double>(end - begin);
    centroid.y /= static_cast<double>(end - begin);
    double r = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        r += distance({c.at(i, 0), c.at(i, 1)}, centroid);
    }
    return r / static_cast<double>(end - begin);
}

} // namespace

// ---- kNN -------------------------------------------------------------------

TEST(Knn, CollinearHandGeometry) {
    const auto g = knn_exact(matrix_of({{0.0f}, {1.0f}, {3.0f}}), 1);
    EXPECT_EQ(g.neighbors(0)[0], 1u);
    EXPECT_EQ(g.neighbors(1)[0], 0u);
    EXPECT_EQ(g.neighbors(2)[0], 1u);
}

TEST(Knn, DuplicatesAreNeighborsNotSelf) {
    const auto g = knn_exact(matrix_of({{1.0f, 1.0f}, {1.0f, 1.0f}, {5.0f, 5.0f}}), 1);
    EXPECT_EQ(g.neighbors(0)[0], 1u);
    EXPECT_EQ(g.neighbors(1)[0], 0u);
    EXPECT_EQ(g.dists(0)[0], 0.0);
}

TEST(Knn, MatchesBruteForceOracle) {
    const auto data = oracle::random_matrix(1000, 10, 99);
    const auto start = std::chrono::steady_clock::now();
    const auto g = knn_exact(data, 15);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
    const auto brute = oracle::brute_knn(data, 15);
    for (std::size_t i = 0; i < data.rows; ++i) {
        const auto ids = g.neighbors(i);
        ASSERT_EQ(std::vector<std::uint32_t>(ids.begin(), ids.end()), brute.ids[i]) << "row " << i;
        for (std::size_t t = 0; t < 15; ++t) {
            ASSERT_NEAR(g.dists(i)[t], brute.distances[i][t], 1e-9);
        }
    }
}

TEST(Knn, ThreadedEqualsSerial) {
    const auto data = oracle::random_matrix(300, 6, 5);
    const auto a = knn_exact(data, 10, 1);
    const auto b = knn_exact(data, 10, 4);
    EXPECT_EQ(a.ids, b.ids);
    EXPECT_EQ(a.distances, b.distances);
}

TEST(Knn, RejectsBadK) {
    const auto data = oracle::random_matrix(10, 3, 1);
    EXPECT_THROW(knn_exact(data, 0), ValidationError);
    EXPECT_THROW(knn_exact(data, 10), ValidationError);
}

// ---- fuzzy calibration --------------------------------------------------------

TEST(Fuzzy, RowSumsAndSymmetry) {
    for (std::size_t k : {5, 15, 50}) {
        const auto data = oracle::random_matrix(500, 8, 1000 + k);
        const auto knn = knn_exact(data, k);
        const auto g = calibrate_fuzzy(knn);
        for (std::size_t i = 0; i < knn.n; ++i) {
            const auto d = knn.dists(i);
            const std::vector<double> dist(d.begin(), d.end());
            ASSERT_NEAR(oracle::membership_sum(dist, g.rho[i], g.sigma[i]), std::log2(static_cast<double>(k)), 1e-5);
            const double expected_sigma = oracle::bisect_sigma(dist, g.rho[i]);
            ASSERT_NEAR(g.sigma[i], expected_sigma, 1e-6 * expected_sigma);
        }
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
                ASSERT_EQ(g.weight(g.columns[e], i), g.weights[e]);
                ASSERT_GT(g.weights[e], 0.0);
                ASSERT_LE(g.weights[e], 1.0);
            }
        }
    }
}

TEST(Fuzzy, SymmetrizationIsProbabilisticUnion) {
    const auto data = oracle::random_matrix(200, 4, 3);
    const auto knn = knn_exact(data, 7);
    const auto g = calibrate_fuzzy(knn);
    auto directed = [&](std::size_t i, std::size_t j) {
        for (std::size_t t = 0; t < knn.k; ++t) {
            if (knn.neighbors(i)[t] == j) {
                return std::exp(-std::max(0.0, knn.dists(i)[t] - g.rho[i]) / g.sigma[i]);
            }
        }
        return 0.0;
    };
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
            const double u = directed(i, g.columns[e]);
            const double v = directed(g.columns[e], i);
            ASSERT_NEAR(g.weights[e], u + v - u * v, 1e-12);
        }
    }
}

TEST(Fuzzy, EquidistantRowClampsToOne) {
    const std::vector<double> d{2.0, 2.0, 2.0, 2.0};
    const auto scale = calibrate_row(d);
    EXPECT_EQ(scale.rho, 2.0);
    EXPECT_EQ(scale.sigma, kSigmaMax);
    EXPECT_EQ(membership(2.0, scale), 1.0);
}

// ---- curve -------------------------------------------------------------------

TEST(Curve, MatchesGridSearchOracle) {
    for (double md : {0.0, 0.1, 0.5}) {
        const auto fit = fit_ab(md);
        const auto [a, b] = oracle::grid_fit_ab(md);
        EXPECT_NEAR(fit.params.a, a, 1e-2) << md;
        EXPECT_NEAR(fit.params.b, b, 1e-2) << md;
        EXPECT_EQ(fit.params(0.0), 1.0);
    }
}

TEST(Curve, ResidualIsTheLeastSquaresOptimum) {
    // Against a fine local scan around the fitted point: no nearby (a, b) does better.
    for (double md : {0.0, 0.1, 0.5}) {
        const auto fit = fit_ab(md);
        auto rms = [&](double a, double b) {
            double s = 0.0;
            for (int i = 0; i < kCurveSamples; ++i) {
                const double x = 3.0 * i / (kCurveSamples - 1.0);
                const double r = 1.0 / (1.0 + a * std::pow(x, 2 * b)) - target_curve(x, md, 1.0);
                s += r * r;
            }
            return std::sqrt(s / kCurveSamples);
        };
        EXPECT_NEAR(fit.rms, rms(fit.params.a, fit.params.b), 1e-12);
        for (double da : {-1e-3, 0.0, 1e-3}) {
            for (double db : {-1e-3, 0.0, 1e-3}) {
                EXPECT_GE(rms(fit.params.a + da, fit.params.b + db), fit.rms - 1e-12);
            }
        }
    }
    EXPECT_LT(fit_ab(0.1).rms, 0.02);
}

TEST(Curve, RejectsOutOfDomain) {
    EXPECT_THROW(fit_ab(-0.1), ValidationError);
    EXPECT_THROW(fit_ab(10.0, 1.0), ValidationError);
}

// ---- layout ---------------------------------------------------------------------

TEST(Layout, SingleEdgePairContracts) {
    const auto g = graph_of(2, {{0, 1, 1.0}});
    LayoutOptions options;
    options.curve = fit_ab(0.0).params;
    options.init = InitMethod::Random;
    const auto c = layout_sgd(g, options);
    EXPECT_LT(distance({c.at(0, 0), c.at(0, 1)}, {c.at(1, 0), c.at(1, 1)}), 1.0);
}

TEST(Layout, TwoCliquesSeparate) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
    for (std::uint32_t base : {0u, 50u}) {
        for (std::uint32_t i = 0; i < 50; ++i) {
            for (std::uint32_t j = i + 1; j < 50; ++j) {
                edges.emplace_back(base + i, base + j, 1.0);
            }
        }
    }
    const auto g = graph_of(100, edges);
    EXPECT_EQ(connected_components(g), 2u);
    for (auto init : {InitMethod::Spectral, InitMethod::Random}) {
        LayoutOptions options;
        options.curve = fit_ab(0.0).params;
        options.init = init;
        const auto c = layout_sgd(g, options);
        Point2 ca;
        Point2 cb;
        const double ra = mean_radius(c, 0, 50, ca);
        const double rb = mean_radius(c, 50, 100, cb);
        EXPECT_GT(distance(ca, cb), 5.0 * 0.5 * (ra + rb)) << to_string(init);
    }
}

TEST(Layout, SameSeedIsByteIdentical) {
    const auto data = oracle::random_matrix(150, 5, 8);
    const auto g = calibrate_fuzzy(knn_exact(data, 10));
    LayoutOptions options;
    options.curve = fit_ab(0.0).params;
    options.epochs = 100;
    const auto a = layout_sgd(g, options);
    const auto b = layout_sgd(g, options);
    EXPECT_EQ(a.values, b.values);
    options.seed = 8;
    EXPECT_NE(layout_sgd(g, options).values, a.values);
}

TEST(Layout, SpectralInitIsBoundedAndFinite) {
    const auto data = oracle::random_matrix(200, 5, 2);
    const auto c = spectral_init(calibrate_fuzzy(knn_exact(data, 10)), 2, 7);
    double mx = 0.0;
    for (double v : c.values) {
        ASSERT_TRUE(std::isfinite(v));
        mx = std::max(mx, std::abs(v));
    }
    EXPECT_NEAR(mx, 10.0, 1e-2);
}

TEST(Layout, HogwildModeStaysFinite) {
    const auto data = oracle::random_matrix(300, 5, 4);
    const auto g = calibrate_fuzzy(knn_exact(data, 10));
    LayoutOptions options;
    options.curve = fit_ab(0.0).params;
    options.epochs = 50;
    options.threads = 3;
    for (double v : layout_sgd(g, options).values) {
        ASSERT_TRUE(std::isfinite(v));
    }
}

// ---- UMAP ------------------------------------------------------------------------

TEST(Umap, BlobsSeparate) {
    const auto blobs = synth::make_blobs(300, 100, 120, 0.1, 7);
    UmapParams params;
    params.n_neighbors = 15;
    const auto start = std::chrono::steady_clock::now();
    const auto model = umap_fit(blobs.train.data, params);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
    const auto km = kmeans(model.coords, 3, 7);
    EXPECT_GE(oracle::majority_purity(km.labels, blobs.train.labels), 0.95);
}

TEST(Umap, RingsSeparateWherePcaFails) {
    const auto rings = synth::make_rings(300, 120, 7);
    UmapParams params;
    params.n_neighbors = 15;
    const auto model = umap_fit(rings.data, params);
    EXPECT_GE(oracle::majority_purity(kmeans(model.coords, 2, 7).labels, rings.labels), 0.9);
    const auto pca = pca_transform(pca_fit(rings.data, 2), rings.data);
    EXPECT_LE(oracle::majority_purity(kmeans(pca, 2, 7).labels, rings.labels), 0.65);
}

TEST(Umap, IdenticalPointsSurvive) {
    DataMatrix data(40, 6);
    std::fill(data.values.begin(), data.values.end(), 1.5f);
    UmapParams params;
    params.n_neighbors = 5;
    params.epochs = 50;
    const auto model = umap_fit(data, params);
    for (double v : model.coords.values) {
        ASSERT_TRUE(std::isfinite(v));
    }
}

TEST(Umap, NeighborsMustBeBelowN) {
    const auto data = oracle::random_matrix(20, 3, 1);
    UmapParams params;
    params.n_neighbors = 20;
    EXPECT_THROW(umap_fit(data, params), ValidationError);
    params.n_neighbors = 0;
    EXPECT_THROW(umap_fit(data, params), ValidationError);
}

TEST(Umap, TransformOfTrainingPointStaysPut) {
    const auto data = oracle::random_matrix(120, 6, 12);
    UmapParams params;
    params.n_neighbors = 10;
    params.epochs = 100;
    const auto model = umap_fit(data, params);
    DataMatrix probe(3, 6);
    for (std::size_t r = 0; r < 3; ++r) {
        std::copy(data.row(r * 40).begin(), data.row(r * 40).end(), probe.row(r).begin());
    }
    const auto placed = umap_transform(model, probe, 0);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_NEAR(placed.at(r, 0), model.coords.at(r * 40, 0), 1e-3);
        EXPECT_NEAR(placed.at(r, 1), model.coords.at(r * 40, 1), 1e-3);
    }
}

TEST(Umap, EquidistantPointStartsAtMidpoint) {
    const auto data = matrix_of({{0.0f, 0.0f}, {2.0f, 0.0f}, {1.0f, 50.0f}});
    UmapParams params;
    params.n_neighbors = 2;
    params.epochs = 50;
    const auto model = umap_fit(data, params);
    const auto placed = umap_transform(model, matrix_of({{1.0f, 0.0f}}), 0);
    EXPECT_NEAR(placed.at(0, 0), 0.5 * (model.coords.at(0, 0) + model.coords.at(1, 0)), 1e-12);
    EXPECT_NEAR(placed.at(0, 1), 0.5 * (model.coords.at(0, 1) + model.coords.at(1, 1)), 1e-12);
}

TEST(Umap, HeldOutBlobsLandNearOwnCentroid) {
    const auto blobs = synth::make_blobs(300, 100, 120, 0.1, 7);
    UmapParams params;
    params.n_neighbors = 15;
    const auto model = umap_fit(blobs.train.data, params);
    const auto centroids = oracle::label_centroids(model.coords, blobs.train.labels);
    const auto placed = umap_transform(model, blobs.holdout.data);
    EXPECT_GE(oracle::nearest_centroid_rate(placed, blobs.holdout.labels, centroids), 0.9);
}

TEST(Umap, SaveLoadRoundTrip) {
    oracle::TempDir dir;
    const auto data = oracle::random_matrix(60, 4, 3);
    UmapParams params;
    params.n_neighbors = 5;
    params.epochs = 30;
    auto model = umap_fit(data, params);
    for (std::size_t i = 0; i < data.rows; ++i) {
        model.provenance.push_back({"v", i});
    }
    save_model(model, dir.path());
    const auto back = load_model(dir.path());
    ASSERT_EQ(back.size(), model.size());
    for (std::size_t i = 0; i < model.coords.values.size(); ++i) {
        EXPECT_EQ(back.coords.values[i], static_cast<double>(static_cast<float>(model.coords.values[i])));
    }
    EXPECT_EQ(back.provenance, model.provenance);
    EXPECT_EQ(back.curve.a, model.curve.a);
    EXPECT_EQ(back.params.n_neighbors, 5u);
}

// ---- PCA -------------------------------------------------------------------------

TEST(Pca, LineGeometry) {
    const auto data = matrix_of({{0, 0}, {1, 1}, {2, 2}, {-3, -3}, {5, 5}});
    const auto model = pca_fit(data, 1);
    EXPECT_NEAR(model.components[0][0], 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(model.components[0][1], 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(model.explained_variance_ratio[0], 1.0, 1e-12);
    DataMatrix mean(1, 2);
    mean.at(0, 0) = static_cast<float>(model.mean[0]);
    mean.at(0, 1) = static_cast<float>(model.mean[1]);
    EXPECT_NEAR(pca_transform(model, mean).at(0, 0), 0.0, 1e-6);
}

TEST(Pca, ReconstructionErrorEqualsDiscardedEigenvalues) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto data = oracle::random_matrix(80, 7, seed);
        const std::size_t d = 1 + seed % 4;
        const auto model = pca_fit(data, d);
        const auto proj = pca_transform(model, data);
        // Independent spectrum from Eigen on the raw covariance.
        Eigen::MatrixXd x(data.rows, data.cols);
        for (std::size_t i = 0; i < data.rows; ++i) {
            for (std::size_t j = 0; j < data.cols; ++j) {
                x(i, j) = data.at(i, j);
            }
        }
        const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.rows - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        double discarded = 0.0;
        for (std::size_t i = 0; i + d < data.cols; ++i) {
            discarded += es.eigenvalues()(static_cast<Eigen::Index>(i));
        }
        double err = 0.0;
        for (std::size_t i = 0; i < data.rows; ++i) {
            for (std::size_t j = 0; j < data.cols; ++j) {
                double r = model.mean[j];
                for (std::size_t c = 0; c < d; ++c) {
                    r += proj.at(i, c) * model.components[c][j];
                }
                err += (x(i, j) - r) * (x(i, j) - r);
            }
        }
        EXPECT_NEAR(err / static_cast<double>(data.rows - 1), discarded, 1e-8);
    }
}

// ---- clustering --------------------------------------------------------------------

TEST(Cluster, KmeansAndPurity) {
    Coordinates pts(6, 2);
    const double xy[6][2] = {{0, 0}, {0.1, 0}, {0, 0.1}, {10, 10}, {10.1, 10}, {10, 10.1}};
    for (int i = 0; i < 6; ++i) {
        pts.at(i, 0) = xy[i][0];
        pts.at(i, 1) = xy[i][1];
    }
    const auto km = kmeans(pts, 2, 1);
    EXPECT_EQ(km.labels[0], km.labels[2]);
    EXPECT_NE(km.labels[0], km.labels[3]);
    const std::vector<int> truth{0, 0, 0, 1, 1, 1};
    EXPECT_EQ(purity(km.labels, truth), 1.0);
    EXPECT_EQ(purity({0, 0, 0, 0, 0, 0}, truth), oracle::majority_purity({0, 0, 0, 0, 0, 0}, truth));
    const auto ds = dbscan(pts, {0.5, 2});
    EXPECT_EQ(ds[0], ds[1]);
    EXPECT_NE(ds[0], ds[3]);
    EXPECT_GT(silhouette(pts, ds), 0.9);
    EXPECT_EQ(silhouette(pts, {0, 0, 0, 0, 0, 0}), 0.0);
}

TEST(Cluster, TrustworthinessOfIdentityIsOne) {
    const auto data = oracle::random_matrix(60, 2, 3);
    Coordinates c(60, 2);
    for (std::size_t i = 0; i < 60; ++i) {
        c.at(i, 0) = data.at(i, 0);
        c.at(i, 1) = data.at(i, 1);
    }
    EXPECT_NEAR(trustworthiness(data, c, 5), 1.0, 1e-12);
}

// ---- sweep -----------------------------------------------------------------------

TEST(Sweep, GridCardinalityAndSingleConfig) {
    const auto data = oracle::random_matrix(80, 4, 2);
    const auto val = oracle::random_matrix(20, 4, 3);
    SweepOptions options;
    options.neighbors = {5, 10};
    options.min_dists = {0.0, 0.1, 0.5};
    options.base.epochs = 20;
    const auto rows = sweep(data, val, options);
    EXPECT_EQ(rows.size(), 6u);
    std::vector<std::size_t> ranks;
    for (const auto& r : rows) {
        ranks.push_back(r.rank);
    }
    std::sort(ranks.begin(), ranks.end());
    EXPECT_EQ(ranks, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6}));
    options.neighbors = {7};
    options.min_dists = {0.1};
    const auto one = sweep(data, val, options);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].rank, 1u);
    options.neighbors = {201};
    EXPECT_THROW(sweep(data, val, options), ValidationError);
}

TEST(Sweep, GoodGraphBeatsDegenerateGraph) {
    const auto blobs = synth::make_blobs(300, 100, 120, 0.1, 7);
    SweepOptions options;
    options.neighbors = {1, 15};
    options.min_dists = {0.0};
    const auto rows = sweep(blobs.train.data, blobs.holdout.data, options);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_GT(rows[1].silhouette, rows[0].silhouette);
    EXPECT_EQ(rows[1].rank, 1u);
    const auto csv = sweep_to_csv(rows);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
