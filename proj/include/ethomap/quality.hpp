#pragma once

#include "ethomap/ingest.hpp"

#include <span>
#include <string>
#include <vector>

namespace ethomap::quality {

inline const std::vector<std::string> kDefaultParts{"leftear", "rightear", "snout", "lefthand", "righthand"};

struct QualityReport {
    std::string video_id;
    std::vector<std::string> parts;
    std::vector<double> part_means;  // raw likelihood means, MISSING counted as 0
    double geomean = 0.0;
    double missing_fraction = 0.0;   // pooled over `parts`, after the tau mask
};

struct SelectionTradeoff {
    std::vector<double> thresholds;
    std::vector<double> kept_fraction;
    std::vector<double> mean_missing_fraction;
    std::vector<double> max_missing_fraction;
};

struct Selection {
    std::vector<std::string> selected;
    SelectionTradeoff tradeoff;
};

/// Samples whose likelihood is below tau become MISSING.
ingest::PoseSeries mask_low_likelihood(const ingest::PoseSeries& pose, double tau = 0.5);

double bodypart_quality(const ingest::PoseSeries& pose, std::string_view part);

/// (prod x_i)^(1/n); zero when any factor is zero.
double geomean(std::span<const double> values);
double geomean_quality(const ingest::PoseSeries& pose, const std::vector<std::string>& parts);

/// Fraction of (frame, part) samples over `parts` that are MISSING.
double missing_fraction(const ingest::PoseSeries& pose, const std::vector<std::string>& parts);

QualityReport assess(const ingest::PoseSeries& pose, const std::vector<std::string>& parts, double tau = 0.5);

/// Videos with geomean >= threshold, plus the tradeoff curve on thresholds 0, 0.05, ..., 1.
Selection select_videos(const std::vector<QualityReport>& reports, double threshold = 0.3);

std::string reports_to_csv(const std::vector<QualityReport>& reports);

} // namespace ethomap::quality
