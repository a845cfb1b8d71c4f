#include "ethomap/quality.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <algorithm>
#include <cmath>

namespace ethomap::quality {

ingest::PoseSeries mask_low_likelihood(const ingest::PoseSeries& pose, double tau) {
    auto out = pose;
    for (auto& s : out.samples) {
        if (s && s->likelihood < tau) {
            s.reset();
        }
    }
    return out;
}

double bodypart_quality(const ingest::PoseSeries& pose, std::string_view part) {
    const std::size_t p = pose.part_index(part);
    double sum = 0.0;
    for (std::size_t f = 0; f < pose.frame_count(); ++f) {
        if (const auto& s = pose.at(f, p)) {
            sum += s->likelihood;
        }
    }
    return sum / static_cast<double>(pose.frame_count());
}

double geomean(std::span<const double> values) {
    if (values.empty()) {
        throw ValidationError("geometric mean of an empty list");
    }
    double log_sum = 0.0;
    double lo = values.front();
    double hi = values.front();
    for (double v : values) {
        if (!(v >= 0.0)) {
            throw ValidationError("geometric mean needs non-negative factors");
        }
        if (v == 0.0) {
            return 0.0;
        }
        log_sum += std::log(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // exp(log) can round just outside [min, max]; the true mean never does.
    return std::clamp(std::exp(log_sum / static_cast<double>(values.size())), lo, hi);
}

double geomean_quality(const ingest::PoseSeries& pose, const std::vector<std::string>& parts) {
    if (parts.empty()) {
        throw ValidationError("geomean quality needs at least one bodypart");
    }
    std::vector<double> means;
    means.reserve(parts.size());
    for (const auto& part : parts) {
        means.push_back(bodypart_quality(pose, part));
    }
    return geomean(means);
}

double missing_fraction(const ingest::PoseSeries& pose, const std::vector<std::string>& parts) {
    std::size_t missing = 0;
    for (const auto& part : parts) {
        const std::size_t p = pose.part_index(part);
        for (std::size_t f = 0; f < pose.frame_count(); ++f) {
            missing += pose.at(f, p) ? 0 : 1;
        }
    }
    return static_cast<double>(missing) / static_cast<double>(pose.frame_count() * parts.size());
}

QualityReport assess(const ingest::PoseSeries& pose, const std::vector<std::string>& parts, double tau) {
    if (parts.empty()) {
        throw ValidationError("quality report needs at least one bodypart");
    }
    QualityReport report;
    report.video_id = pose.video_id;
    report.parts = parts;
    for (const auto& part : parts) {
        report.part_means.push_back(bodypart_quality(pose, part));
    }
    report.geomean = geomean(report.part_means);
    report.missing_fraction = missing_fraction(mask_low_likelihood(pose, tau), parts);
    return report;
}

Selection select_videos(const std::vector<QualityReport>& reports, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("geomean threshold must be in [0, 1]");
    }
    Selection result;
    for (const auto& r : reports) {
        if (r.geomean >= threshold) {
            result.selected.push_back(r.video_id);
        }
    }

    auto& t = result.tradeoff;
    for (int i = 0; i <= 20; ++i) {
        const double cut = i / 20.0;
        std::size_t kept = 0;
        double missing_sum = 0.0;
        double missing_max = 0.0;
        for (const auto& r : reports) {
            if (r.geomean >= cut) {
                ++kept;
                missing_sum += r.missing_fraction;
                missing_max = std::max(missing_max, r.missing_fraction);
            }
        }
        t.thresholds.push_back(cut);
        t.kept_fraction.push_back(reports.empty() ? 0.0
                                                  : static_cast<double>(kept) / static_cast<double>(reports.size()));
        t.mean_missing_fraction.push_back(kept ? missing_sum / static_cast<double>(kept) : 0.0);
        t.max_missing_fraction.push_back(missing_max);
    }
    return result;
}

std::string reports_to_csv(const std::vector<QualityReport>& reports) {
    std::string out = "video_id";
    if (!reports.empty()) {
        for (const auto& part : reports.front().parts) {
            out += "," + part + "_mean";
        }
    }
    out += ",geomean,missing_fraction\n";
    for (const auto& r : reports) {
        out += r.video_id;
        for (double m : r.part_means) {
            out += "," + util::format_double(m);
        }
        out += "," + util::format_double(r.geomean) + "," + util::format_double(r.missing_fraction) + "\n";
    }
    return out;
}

} // namespace ethomap::quality
