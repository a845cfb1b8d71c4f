#pragma once

namespace ethomap::embed {

/// Low-dimensional similarity 1 / (1 + a * d^(2b)).
struct CurveParams {
    double a = 1.0;
    double b = 1.0;

    double operator()(double d) const;
};

struct CurveFit {
    CurveParams params;
    double rms = 0.0;
    int iterations = 0;
};

inline constexpr int kCurveSamples = 300;

/// Target curve: 1 for d <= min_dist, exp(-(d - min_dist) / spread) beyond, sampled at
/// 300 points on [0, 3 * spread]. Gauss-Newton with backtracking from a = b = 1;
/// throws Error after 200 iterations without convergence.
CurveFit fit_ab(double min_dist, double spread = 1.0);

/// Sampled target curve used by fit_ab.
double target_curve(double d, double min_dist, double spread);

} // namespace ethomap::embed
