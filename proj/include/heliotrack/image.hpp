// 8-bit RGB raster, binary PPM (P6) I/O and RGB->HSL conversion.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace heliotrack {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    constexpr bool operator==(const Rgb&) const = default;
};

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major interleaved RGB, 3 * width * height samples.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = {});

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    Rgb at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const std::size_t i = index(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

void write_ppm(std::ostream& os, const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);
std::string encode_ppm(const Image& img);
Image read_ppm(std::istream& is);
Image read_ppm(const std::filesystem::path& path);

struct HslPixel {
    double hue_deg = 0.0;     // [0, 360)
    double saturation = 0.0;  // [0, 1]
    double lightness = 0.0;   // [0, 1]
};

HslPixel rgb_to_hsl(std::uint8_t r, std::uint8_t g, std::uint8_t b);
inline HslPixel rgb_to_hsl(Rgb c) { return rgb_to_hsl(c.r, c.g, c.b); }

}  // namespace heliotrack
