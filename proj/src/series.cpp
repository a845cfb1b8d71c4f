#include "ethomap/series.hpp"

#include "ethomap/error.hpp"
#include "ethomap/quality.hpp"
#include "ethomap/util.hpp"

#include <algorithm>
#include <cmath>

namespace ethomap::series {

Track1P differential_smooth(const Track1P& track, double d_max) {
    Track1P out = track;
    for (std::size_t t = 1; t < track.size(); ++t) {
        if (track[t] && track[t - 1] && distance(*track[t], *track[t - 1]) > d_max) {
            out[t].reset();
        }
    }
    return out;
}

std::size_t observed_count(const Track1P& track) {
    return static_cast<std::size_t>(std::count_if(track.begin(), track.end(), [](const auto& p) { return p.has_value(); }));
}

namespace {

std::vector<std::size_t> knots_of(const Track1P& track) {
    std::vector<std::size_t> knots;
    for (std::size_t t = 0; t < track.size(); ++t) {
        if (track[t]) {
            knots.push_back(t);
        }
    }
    if (knots.empty()) {
        throw ValidationError("track has no observed samples");
    }
    return knots;
}

// Holds the first/last observation over the leading/trailing gaps.
void fill_edges(const Track1P& track, const std::vector<std::size_t>& knots, std::vector<Point2>& out) {
    for (std::size_t t = 0; t < knots.front(); ++t) {
        out[t] = *track[knots.front()];
    }
    for (std::size_t t = knots.back() + 1; t < track.size(); ++t) {
        out[t] = *track[knots.back()];
    }
    for (auto k : knots) {
        out[k] = *track[k];
    }
}

} // namespace

std::vector<Point2> interpolate_linear(const Track1P& track) {
    const auto knots = knots_of(track);
    std::vector<Point2> out(track.size());
    fill_edges(track, knots, out);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const auto a = knots[k];
        const auto b = knots[k + 1];
        const Point2 pa = *track[a];
        const Point2 pb = *track[b];
        for (std::size_t t = a + 1; t < b; ++t) {
            const double u = static_cast<double>(t - a) / static_cast<double>(b - a);
            out[t] = {pa.x + u * (pb.x - pa.x), pa.y + u * (pb.y - pa.y)};
        }
    }
    return out;
}

NaturalSpline::NaturalSpline(std::vector<double> xs, std::vector<double> ys)
    : x_(std::move(xs)), y_(std::move(ys)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
        throw ValidationError("spline needs at least two knots with matching values");
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(x_[i] < x_[i + 1])) {
            throw ValidationError("spline abscissae must increase strictly");
        }
    }
    if (n == 2) {
        return;
    }
    // Tridiagonal system for interior second derivatives, solved with the Thomas algorithm.
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < m; ++i) {
        const double lower = x_[i + 1] - x_[i];  // h_{i}, sub-diagonal entry of row i
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) {
        m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
    }
}

double NaturalSpline::operator()(double x) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double a = x_[i + 1] - x;
    const double b = x - x_[i];
    return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * b * b * b / (6.0 * h) + (y_[i] / h - m_[i] * h / 6.0) * a +
           (y_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
}

std::vector<Point2> interpolate_cubic(const Track1P& track) {
    const auto knots = knots_of(track);
    std::vector<Point2> out(track.size());
    fill_edges(track, knots, out);
    if (knots.size() < 2) {
        return out;
    }
    std::vector<double> xs, px, py;
    for (auto k : knots) {
        xs.push_back(static_cast<double>(k));
        px.push_back(track[k]->x);
        py.push_back(track[k]->y);
    }
    const NaturalSpline sx(xs, px);
    const NaturalSpline sy(xs, py);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        for (std::size_t t = knots[k] + 1; t < knots[k + 1]; ++t) {
            out[t] = {sx(static_cast<double>(t)), sy(static_cast<double>(t))};
        }
    }
    return out;
}

DisplacementHistogram displacement_histogram(const std::vector<Track1P>& tracks, double bin_width, double d_max) {
    if (!(bin_width > 0.0)) {
        throw ValidationError("histogram bin width must be positive");
    }
    DisplacementHistogram h;
    h.bin_width = bin_width;
    h.d_max = d_max;
    std::size_t within = 0;
    for (const auto& track : tracks) {
        std::size_t pairs = 0;
        std::size_t track_within = 0;
        for (std::size_t t = 1; t < track.size(); ++t) {
            if (!track[t] || !track[t - 1]) {
                continue;
            }
            const double d = distance(*track[t], *track[t - 1]);
            const auto bin = static_cast<std::size_t>(std::floor(d / bin_width));
            if (h.counts.size() <= bin) {
                h.counts.resize(bin + 1, 0);
            }
            ++h.counts[bin];
            ++pairs;
            track_within += d <= d_max ? 1 : 0;
        }
        h.total_pairs += pairs;
        within += track_within;
        h.per_track_fraction_within.push_back(pairs ? static_cast<double>(track_within) / static_cast<double>(pairs)
                                                    : 1.0);
    }
    h.fraction_within = h.total_pairs ? static_cast<double>(within) / static_cast<double>(h.total_pairs) : 1.0;
    return h;
}

CleanSeries centroid_normalize(const CleanSeries& series, const std::vector<std::string>& parts) {
    if (parts.empty()) {
        throw ValidationError("centroid normalization needs at least one bodypart");
    }
    std::vector<std::size_t> index;
    for (const auto& name : parts) {
        const auto it = std::find(series.bodyparts.begin(), series.bodyparts.end(), name);
        if (it == series.bodyparts.end()) {
            throw ValidationError("unknown bodypart '" + name + "'");
        }
        index.push_back(static_cast<std::size_t>(it - series.bodyparts.begin()));
    }
    CleanSeries out = series;
    for (std::size_t f = 0; f < series.frames; ++f) {
        Point2 c;
        for (auto p : index) {
            c.x += series.at(f, p).x;
            c.y += series.at(f, p).y;
        }
        c.x /= static_cast<double>(index.size());
        c.y /= static_cast<double>(index.size());
        for (std::size_t p = 0; p < series.bodyparts.size(); ++p) {
            out.at(f, p) = {series.at(f, p).x - c.x, series.at(f, p).y - c.y};
        }
    }
    out.normalized = true;
    return out;
}

Track1P extract_track(const ingest::PoseSeries& pose, std::size_t part) {
    Track1P track(pose.frame_count());
    for (std::size_t f = 0; f < pose.frame_count(); ++f) {
        if (const auto& s = pose.at(f, part)) {
            track[f] = Point2{s->x, s->y};
        }
    }
    return track;
}

CleanOutcome clean_video(const ingest::PoseSeries& pose, const CleanOptions& options) {
    if (options.parts.empty()) {
        throw ValidationError("no bodyparts configured");
    }
    CleanOutcome outcome;
    const auto masked = quality::mask_low_likelihood(pose, options.tau);

    CleanSeries clean;
    clean.video_id = pose.video_id;
    clean.bodyparts = options.parts;
    clean.frames = pose.frame_count();
    clean.positions.resize(clean.frames * options.parts.size());

    for (std::size_t i = 0; i < options.parts.size(); ++i) {
        auto track = extract_track(masked, masked.part_index(options.parts[i]));
        outcome.observed_after_mask += observed_count(track);
        outcome.masked_tracks.push_back(track);
        if (options.smooth) {
            auto smoothed = differential_smooth(track, options.d_max);
            outcome.removed_by_smoothing += observed_count(track) - observed_count(smoothed);
            track = std::move(smoothed);
        }
        if (observed_count(track) < 2) {
            outcome.rejection = "bodypart '" + options.parts[i] + "' has fewer than 2 usable observations";
            continue;
        }
        const auto filled = options.interpolation == Interpolation::Cubic ? interpolate_cubic(track)
                                                                         : interpolate_linear(track);
        for (std::size_t f = 0; f < clean.frames; ++f) {
            clean.at(f, i) = filled[f];
        }
    }
    if (!outcome.rejection.empty()) {
        return outcome;
    }
    outcome.series = options.normalize ? centroid_normalize(clean, options.parts) : std::move(clean);
    return outcome;
}

std::string serialize_clean(const CleanSeries& series) {
    std::string out;
    for (std::size_t p = 0; p < series.bodyparts.size(); ++p) {
        out += (p ? "," : "") + series.bodyparts[p] + "_x," + series.bodyparts[p] + "_y";
    }
    out += '\n';
    for (std::size_t f = 0; f < series.frames; ++f) {
        for (std::size_t p = 0; p < series.bodyparts.size(); ++p) {
            const auto& q = series.at(f, p);
            out += (p ? "," : "") + util::format_double(q.x) + "," + util::format_double(q.y);
        }
        out += '\n';
    }
    return out;
}

CleanSeries parse_clean(std::string_view text, std::string video_id, bool normalized) {
    CleanSeries series;
    series.video_id = std::move(video_id);
    series.normalized = normalized;
    std::size_t number = 0;
    bool header = true;
    for (auto line : util::split(text, '\n')) {
        ++number;
        line = util::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto cells = util::split(line, ',');
        if (header) {
            if (cells.size() % 2 != 0 || cells.empty()) {
                throw ParseError(number, "clean series header needs <part>_x,<part>_y pairs");
            }
            for (std::size_t i = 0; i < cells.size(); i += 2) {
                const auto x = util::trim(cells[i]);
                const auto y = util::trim(cells[i + 1]);
                if (x.size() < 3 || !x.ends_with("_x") || !y.ends_with("_y") ||
                    x.substr(0, x.size() - 2) != y.substr(0, y.size() - 2)) {
                    throw ParseError(number, "clean series header needs <part>_x,<part>_y pairs");
                }
                series.bodyparts.emplace_back(x.substr(0, x.size() - 2));
            }
            header = false;
            continue;
        }
        if (cells.size() != 2 * series.bodyparts.size()) {
            throw ParseError(number, "row arity does not match header");
        }
        for (std::size_t i = 0; i < cells.size(); i += 2) {
            const auto x = util::parse_double(cells[i]);
            const auto y = util::parse_double(cells[i + 1]);
            if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
                throw ParseError(number, "clean series values must be finite numbers");
            }
            series.positions.push_back({*x, *y});
        }
        ++series.frames;
    }
    if (header) {
        throw ParseError(number, "empty clean series");
    }
    return series;
}

} // namespace ethomap::series
