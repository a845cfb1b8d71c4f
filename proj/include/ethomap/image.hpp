#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ethomap {

/// 8-bit single-channel image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Luma from 8-bit RGB with 0.299/0.587/0.114 weights, rounded half away from zero.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Reads PNG (gray, gray+alpha, RGB, RGBA, palette) or binary/ASCII PGM.
/// Color inputs are converted with luma(); alpha is ignored.
GrayImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& image);
std::string encode_png(const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

} // namespace ethomap
