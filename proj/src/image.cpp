#include "ethomap/image.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <fstream>

namespace ethomap {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::min(255.0, std::round(y)));
}

namespace {

GrayImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error(path.string() + ": " + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw Error(path.string() + ": " + message);
    }

    GrayImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!color) {
        out.pixels.assign(buffer.begin(), buffer.end());
        return out;
    }
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
    }
    return out;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_pgm_token(const std::string& data, std::size_t& pos) {
    while (pos < data.size()) {
        if (data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#') {
        ++pos;
    }
    return data.substr(start, pos - start);
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const std::string data = util::read_file(path);
    std::size_t pos = 0;
    const std::string magic = next_pgm_token(data, pos);
    if (magic != "P5" && magic != "P2") {
        throw Error(path.string() + ": not a PGM file");
    }
    const auto width = util::parse_int(next_pgm_token(data, pos));
    const auto height = util::parse_int(next_pgm_token(data, pos));
    const auto maxval = util::parse_int(next_pgm_token(data, pos));
    if (!width || !height || !maxval || *width <= 0 || *height <= 0 || *maxval <= 0 || *maxval > 255) {
        throw Error(path.string() + ": unsupported PGM header");
    }
    GrayImage out(static_cast<int>(*width), static_cast<int>(*height));
    if (magic == "P5") {
        ++pos;  // single whitespace after maxval
        if (data.size() < pos + out.pixels.size()) {
            throw Error(path.string() + ": truncated PGM data");
        }
        for (std::size_t i = 0; i < out.pixels.size(); ++i) {
            out.pixels[i] = static_cast<std::uint8_t>(data[pos + i]);
        }
    } else {
        for (auto& p : out.pixels) {
            const auto v = util::parse_int(next_pgm_token(data, pos));
            if (!v || *v < 0 || *v > *maxval) {
                throw Error(path.string() + ": bad PGM sample");
            }
            p = static_cast<std::uint8_t>(*v);
        }
    }
    return out;
}

png_image gray_png_header(const GrayImage& image) {
    png_image header{};
    header.version = PNG_IMAGE_VERSION;
    header.width = static_cast<png_uint_32>(image.width);
    header.height = static_cast<png_uint_32>(image.height);
    header.format = PNG_FORMAT_GRAY;
    return header;
}

} // namespace

GrayImage read_image(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (ext == ".pgm") {
        return read_pgm(path);
    }
    return read_png(path);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    util::write_file_atomic(path, encode_png(image));
}

std::string encode_png(const GrayImage& image) {
    png_image header = gray_png_header(image);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&header, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
        throw Error(std::string("png encode: ") + header.message);
    }
    std::string bytes(size, '\0');
    header = gray_png_header(image);
    if (!png_image_write_to_memory(&header, bytes.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
        throw Error(std::string("png encode: ") + header.message);
    }
    bytes.resize(size);
    return bytes;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    bytes.append(image.pixels.begin(), image.pixels.end());
    util::write_file_atomic(path, bytes);
}

} // namespace ethomap
