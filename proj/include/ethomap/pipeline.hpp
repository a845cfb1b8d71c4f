#pragma once

#include "ethomap/embed/umap.hpp"
#include "ethomap/series.hpp"
#include "ethomap/spotlight.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ethomap::pipeline {

using Json = nlohmann::ordered_json;

struct QualityParams {
    double tau = 0.5;
    double geomean_threshold = 0.3;
    std::vector<std::string> parts;  // empty: the default five

    void validate() const;
};

struct WindowParams {
    std::size_t omega = 60;
    std::size_t stride = 1;
    std::size_t cap = 0;  // 0: keep every window
    std::uint64_t seed = 7;

    void validate() const;
};

/// Every stage parameter; defaults are the reference values.
struct PipelineConfig {
    std::filesystem::path detections;  // JSONL file or directory of them
    std::filesystem::path poses;       // directory of pose CSVs
    std::filesystem::path out;
    spotlight::SpotlightConfig spotlight;
    double hist_bin_seconds = 1.0;
    QualityParams quality;
    series::CleanOptions clean;        // parts/tau are taken from `quality`
    WindowParams windows;
    embed::UmapParams umap;
    std::size_t pca_dims = 2;
    unsigned threads = 1;

    void validate() const;
    Json echo() const;
};

/// Stage functions read and write artifacts only; each returns the counts it also
/// stores as `<stage dir>/summary.json`.
Json spotlight_stage(const std::filesystem::path& detections, const spotlight::SpotlightConfig& config,
                     double bin_seconds, const std::filesystem::path& out_dir, unsigned threads);

/// With `segments` given, pose tables without a matching spotlight segment are skipped.
Json quality_stage(const std::filesystem::path& poses, const std::optional<std::filesystem::path>& segments,
                   const QualityParams& params, const std::filesystem::path& out_dir, unsigned threads);

/// With `selection` given, only selected videos are cleaned.
Json clean_stage(const std::filesystem::path& poses, const std::optional<std::filesystem::path>& selection,
                 const series::CleanOptions& options, const std::filesystem::path& out_dir, unsigned threads);

Json windows_stage(const std::filesystem::path& clean_dir, const WindowParams& params,
                   const std::filesystem::path& out_dir);

Json umap_stage(const std::filesystem::path& windows_dir, const embed::UmapParams& params,
                const std::filesystem::path& out_dir);

Json pca_stage(const std::filesystem::path& windows_dir, std::size_t dims, const std::filesystem::path& out_dir);

inline const std::vector<std::string> kStages{"spotlight", "quality", "clean", "windows", "embedding", "pca"};

/// report.json from the stage summaries under `out`, with optional parameter echo and timings.
Json build_report(const std::filesystem::path& out, const Json& parameters, const Json& timings);
void write_report(const std::filesystem::path& out, const Json& report);

/// All stages in order under config.out, then report.json.
Json run_pipeline(const PipelineConfig& config);

/// Sorted list of regular files with the given extension.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& extension);

} // namespace ethomap::pipeline
