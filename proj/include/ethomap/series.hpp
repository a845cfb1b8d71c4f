#pragma once

#include "ethomap/ingest.hpp"
#include "ethomap/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ethomap::series {

/// Complete per-frame positions for a set of bodyparts of one video.
struct CleanSeries {
    std::string video_id;
    std::vector<std::string> bodyparts;
    std::size_t frames = 0;
    std::vector<Point2> positions;  // frame-major: positions[frame * bodyparts.size() + part]
    bool normalized = false;

    const Point2& at(std::size_t frame, std::size_t part) const { return positions[frame * bodyparts.size() + part]; }
    Point2& at(std::size_t frame, std::size_t part) { return positions[frame * bodyparts.size() + part]; }

    friend bool operator==(const CleanSeries&, const CleanSeries&) = default;
};

enum class Interpolation { Linear, Cubic };

/// Marks frame t missing when both t-1 and t are observed in the input and they
/// are more than d_max apart. Comparisons always use the raw predecessor.
Track1P differential_smooth(const Track1P& track, double d_max = 10.0);

/// Interior gaps filled along straight lines; edges held at the nearest observation.
std::vector<Point2> interpolate_linear(const Track1P& track);

/// Natural cubic spline through the observed frames, constant beyond the end knots.
/// A single observation fills the whole track.
std::vector<Point2> interpolate_cubic(const Track1P& track);

/// Natural cubic spline over strictly increasing abscissae.
class NaturalSpline {
public:
    NaturalSpline(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    const std::vector<double>& second_derivatives() const { return m_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
};

struct DisplacementHistogram {
    double bin_width = 1.0;
    double d_max = 10.0;
    std::vector<std::size_t> counts;  // counts[i]: displacement in [i, i+1) * bin_width
    std::size_t total_pairs = 0;
    double fraction_within = 0.0;                 // pooled over tracks
    std::vector<double> per_track_fraction_within;  // one entry per track; 1 when a track has no pairs
};

DisplacementHistogram displacement_histogram(const std::vector<Track1P>& tracks, double bin_width,
                                             double d_max = 10.0);

/// Subtracts, frame by frame, the mean position of `parts` from every bodypart.
CleanSeries centroid_normalize(const CleanSeries& series, const std::vector<std::string>& parts);

Track1P extract_track(const ingest::PoseSeries& pose, std::size_t part);
std::size_t observed_count(const Track1P& track);

struct CleanOptions {
    std::vector<std::string> parts;
    double tau = 0.5;
    double d_max = 10.0;
    bool smooth = true;
    Interpolation interpolation = Interpolation::Cubic;
    bool normalize = true;
};

struct CleanOutcome {
    std::optional<CleanSeries> series;  // empty when rejected
    std::string rejection;
    std::size_t observed_after_mask = 0;
    std::size_t removed_by_smoothing = 0;
    std::vector<Track1P> masked_tracks;  // per configured part, before smoothing
};

/// mask → smooth → interpolate → normalize for the configured parts. Videos with a
/// part observed fewer than twice are rejected.
CleanOutcome clean_video(const ingest::PoseSeries& pose, const CleanOptions& options);

/// Header `<part>_x,<part>_y,...`, then one row per frame.
std::string serialize_clean(const CleanSeries& series);
CleanSeries parse_clean(std::string_view text, std::string video_id, bool normalized = true);

} // namespace ethomap::series
