#include "ethomap/explore/canny.hpp"

#include "ethomap/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ethomap::explore {

void CannyParams::validate() const {
    if (!(low >= 0.0) || !(high >= low)) {
        throw ValidationError("canny thresholds need high >= low >= 0");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("canny blur sigma must be finite and non-negative");
    }
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) {
        return {1.0};
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) {
        k /= sum;
    }
    return kernel;
}

// Separable convolution with replicated borders.
std::vector<double> blur(const GrayImage& image, double sigma) {
    const int w = image.width;
    const int h = image.height;
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    std::vector<double> out(tmp.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * image.at(std::clamp(x + k, 0, w - 1), y);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

} // namespace

EdgeMap canny(const GrayImage& image, const CannyParams& params) {
    params.validate();
    const int w = image.width;
    const int h = image.height;
    EdgeMap edges(w, h);
    if (w == 0 || h == 0) {
        return edges;
    }
    const auto smooth = blur(image, params.sigma);
    auto px = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };

    std::vector<double> magnitude(smooth.size());
    std::vector<unsigned char> direction(smooth.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            magnitude[i] = std::hypot(gx, gy);
            // Gradient angle folded into [0, 180) and quantized to 0, 45, 90, 135 degrees.
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) {
                angle += 180.0;
            }
            if (angle < 22.5 || angle >= 157.5) {
                direction[i] = 0;
            } else if (angle < 67.5) {
                direction[i] = 1;
            } else if (angle < 112.5) {
                direction[i] = 2;
            } else {
                direction[i] = 3;
            }
        }
    }

    auto mag = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) {
            return 0.0;
        }
        return magnitude[static_cast<std::size_t>(y) * w + x];
    };
    // Neighbor offsets along the gradient for each direction bin (y grows downward).
    static constexpr int dx[4] = {1, 1, 0, -1};
    static constexpr int dy[4] = {0, 1, 1, 1};

    // 0 = suppressed, 1 = weak, 2 = strong. Ties along a ridge keep the pixel on the
    // "before" side only, so a symmetric ridge two pixels wide thins to one.
    std::vector<unsigned char> state(smooth.size(), 0);
    std::vector<std::size_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double m = magnitude[i];
            if (!(m > 0.0) || m < params.low) {
                continue;
            }
            const int d = direction[i];
            const double ahead = mag(x + dx[d], y + dy[d]);
            const double behind = mag(x - dx[d], y - dy[d]);
            // Magnitudes equal up to rounding count as ties.
            const double tol = 1e-9 * std::max(1.0, m);
            if (!(m >= ahead - tol && m > behind + tol)) {
                continue;
            }
            if (m >= params.high) {
                state[i] = 2;
                stack.push_back(i);
            } else {
                state[i] = 1;
            }
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        edges.values[i] = 1.0;
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        for (int oy = -1; oy <= 1; ++oy) {
            for (int ox = -1; ox <= 1; ++ox) {
                const int nx = x + ox;
                const int ny = y + oy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                    continue;
                }
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (state[j] == 1) {
                    state[j] = 2;
                    stack.push_back(j);
                }
            }
        }
    }
    return edges;
}

GrayImage to_image(const EdgeMap& map) {
    GrayImage image(map.width, map.height);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        image.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(map.values[i], 0.0, 1.0)));
    }
    return image;
}

} // namespace ethomap::explore
