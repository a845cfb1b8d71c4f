#include "ethomap/embed/sweep.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ethomap::embed {

std::vector<SweepRow> sweep(const windows::DataMatrix& train, const windows::DataMatrix& validation,
                            const SweepOptions& options) {
    if (options.neighbors.empty() || options.min_dists.empty()) {
        throw ValidationError("sweep grids must be non-empty");
    }
    for (std::size_t k : options.neighbors) {
        if (k < 1 || k > 200) {
            throw ValidationError("sweep neighbor values must lie in [1, 200]");
        }
    }
    for (double md : options.min_dists) {
        if (!(md >= 0.0 && md <= 1.0)) {
            throw ValidationError("sweep min_dist values must lie in [0, 1]");
        }
    }
    std::vector<SweepRow> rows;
    for (std::size_t k : options.neighbors) {
        for (double md : options.min_dists) {
            UmapParams params = options.base;
            params.n_neighbors = k;
            params.min_dist = md;
            const EmbeddingModel model = umap_fit(train, params);
            const Coordinates placed = umap_transform(model, validation);

            SweepRow row;
            row.n_neighbors = k;
            row.min_dist = md;
            const auto labels = dbscan(placed, options.dbscan);
            std::set<int> distinct;
            std::size_t noise = 0;
            for (int l : labels) {
                if (l == kNoise) {
                    ++noise;
                } else {
                    distinct.insert(l);
                }
            }
            row.clusters = distinct.size();
            row.noise_fraction = labels.empty() ? 0.0 : static_cast<double>(noise) / static_cast<double>(labels.size());
            row.silhouette = silhouette(placed, labels);
            row.trustworthiness = trustworthiness(validation, placed, options.trust_k);
            row.score = options.metric == SweepMetric::Silhouette ? row.silhouette : row.trustworthiness;
            rows.push_back(row);
        }
    }
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return rows[l].score > rows[r].score; });
    for (std::size_t r = 0; r < order.size(); ++r) {
        rows[order[r]].rank = r + 1;
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "n_neighbors,min_dist,silhouette,clusters,noise_fraction,trustworthiness,score,rank\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n_neighbors) + "," + util::format_double(r.min_dist) + "," +
               util::format_double(r.silhouette) + "," + std::to_string(r.clusters) + "," +
               util::format_double(r.noise_fraction) + "," + util::format_double(r.trustworthiness) + "," +
               util::format_double(r.score) + "," + std::to_string(r.rank) + "\n";
    }
    return out;
}

std::string to_string(SweepMetric metric) {
    return metric == SweepMetric::Silhouette ? "silhouette" : "trustworthiness";
}

SweepMetric metric_from_string(const std::string& name) {
    if (name == "silhouette") {
        return SweepMetric::Silhouette;
    }
    if (name == "trustworthiness") {
        return SweepMetric::Trustworthiness;
    }
    throw ValidationError("unknown sweep metric: " + name);
}

} // namespace ethomap::embed
