#include "ethomap/embed/curve.hpp"

#include "ethomap/error.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace ethomap::embed {

double CurveParams::operator()(double d) const {
    return 1.0 / (1.0 + a * std::pow(d, 2.0 * b));
}

double target_curve(double d, double min_dist, double spread) {
    return d <= min_dist ? 1.0 : std::exp(-(d - min_dist) / spread);
}

namespace {

struct Samples {
    std::vector<double> xs;
    std::vector<double> ys;
};

Samples sample_target(double min_dist, double spread) {
    Samples s;
    const double hi = 3.0 * spread;
    for (int i = 0; i < kCurveSamples; ++i) {
        const double x = hi * static_cast<double>(i) / static_cast<double>(kCurveSamples - 1);
        s.xs.push_back(x);
        s.ys.push_back(target_curve(x, min_dist, spread));
    }
    return s;
}

double sse(const Samples& s, CurveParams p) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
        const double r = p(s.xs[i]) - s.ys[i];
        total += r * r;
    }
    return total;
}

} // namespace

CurveFit fit_ab(double min_dist, double spread) {
    if (!(spread > 0.0) || !(min_dist >= 0.0) || !(min_dist < spread * 10.0)) {
        throw ValidationError("min_dist must lie in [0, 10 * spread) with spread > 0");
    }
    const Samples s = sample_target(min_dist, spread);
    CurveParams p{1.0, 1.0};
    double current = sse(s, p);

    for (int it = 1; it <= 200; ++it) {
        // Normal equations J^T J step = -J^T r.
        double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            const double x = s.xs[i];
            if (x <= 0.0) {
                continue;  // f(0) = 1 for any (a, b): zero residual and zero gradient there
            }
            const double u = std::pow(x, 2.0 * p.b);
            const double denom = 1.0 + p.a * u;
            const double f = 1.0 / denom;
            const double r = f - s.ys[i];
            const double da = -u / (denom * denom);
            const double db = -p.a * u * 2.0 * std::log(x) / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        const double det = jaa * jbb - jab * jab;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
            throw Error("curve fit: singular normal equations");
        }
        const double step_a = -(jbb * ga - jab * gb) / det;
        const double step_b = -(jaa * gb - jab * ga) / det;

        double scale = 1.0;
        CurveParams next = p;
        double trial = current;
        bool improved = false;
        for (int half = 0; half < 60; ++half, scale *= 0.5) {
            next = {p.a + scale * step_a, p.b + scale * step_b};
            if (next.a > 0.0 && next.b > 0.0) {
                trial = sse(s, next);
                if (trial < current) {
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            return {p, std::sqrt(current / kCurveSamples), it};
        }
        const double change = current - trial;
        p = next;
        current = trial;
        if (change <= 1e-15 * (1.0 + current) ||
            std::hypot(scale * step_a, scale * step_b) <= 1e-12 * (1.0 + std::hypot(p.a, p.b))) {
            return {p, std::sqrt(current / kCurveSamples), it};
        }
    }
    throw Error("curve fit did not converge in 200 iterations for min_dist=" + std::to_string(min_dist));
}

} // namespace ethomap::embed
