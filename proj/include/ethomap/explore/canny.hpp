#pragma once

#include "ethomap/image.hpp"

#include <vector>

namespace ethomap::explore {

struct CannyParams {
    double low = 50.0;   // hysteresis thresholds on the Sobel gradient magnitude
    double high = 150.0;
    double sigma = 1.4;  // Gaussian blur; kernel radius ceil(3 sigma)

    void validate() const;
};

/// Edge intensities in [0, 1], row-major.
struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const EdgeMap&, const EdgeMap&) = default;
};

/// Blur, Sobel, 4-direction non-maximum suppression, 8-connected hysteresis.
/// The result is binary.
EdgeMap canny(const GrayImage& image, const CannyParams& params = {});

/// round(255 * v) per pixel.
GrayImage to_image(const EdgeMap& map);

} // namespace ethomap::explore
