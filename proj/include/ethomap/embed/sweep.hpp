#pragma once

#include "ethomap/embed/cluster.hpp"
#include "ethomap/embed/umap.hpp"
#include "ethomap/windows.hpp"

#include <string>
#include <vector>

namespace ethomap::embed {

enum class SweepMetric { Silhouette, Trustworthiness };

struct SweepOptions {
    std::vector<std::size_t> neighbors{5, 15, 50, 200};
    std::vector<double> min_dists{0.0, 0.1, 0.5};
    UmapParams base;  // everything but n_neighbors / min_dist
    SweepMetric metric = SweepMetric::Silhouette;
    DbscanOptions dbscan;
    std::size_t trust_k = 5;
};

struct SweepRow {
    std::size_t n_neighbors = 0;
    double min_dist = 0.0;
    double silhouette = 0.0;
    std::size_t clusters = 0;
    double noise_fraction = 0.0;
    double trustworthiness = 0.0;
    double score = 0.0;
    std::size_t rank = 0;  // 1 = best
};

/// Fits every grid configuration on `train`, transforms `validation`, clusters the
/// transformed points by density and scores them. Rows come back in grid order
/// (neighbors outer) with ranks filled in; ties rank the earlier configuration first.
std::vector<SweepRow> sweep(const windows::DataMatrix& train, const windows::DataMatrix& validation,
                            const SweepOptions& options);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

std::string to_string(SweepMetric metric);
SweepMetric metric_from_string(const std::string& name);

} // namespace ethomap::embed
