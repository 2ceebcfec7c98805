#include "heliotrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace heliotrack {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw ImageError("image dimensions must be positive");
    }
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

void write_ppm(std::ostream& os, const Image& img) {
    os << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ImageError("cannot open " + path.string() + " for writing");
    }
    write_ppm(os, img);
}

std::string encode_ppm(const Image& img) {
    std::ostringstream os(std::ios::binary);
    write_ppm(os, img);
    return std::move(os).str();
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& is) {
    std::string tok;
    while (is) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof()) break;
        if (c == '#') {
            std::string ignored;
            std::getline(is, ignored);
            if (!tok.empty()) break;
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Image read_ppm(std::istream& is) {
    if (header_token(is) != "P6") {
        throw ImageError("not a binary PPM (P6)");
    }
    int w = 0;
    int h = 0;
    int maxval = 0;
    try {
        w = std::stoi(header_token(is));
        h = std::stoi(header_token(is));
        maxval = std::stoi(header_token(is));
    } catch (const std::exception&) {
        throw ImageError("malformed PPM header");
    }
    if (maxval != 255) {
        throw ImageError("only 8-bit PPM is supported");
    }
    Image img(w, h);
    is.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (is.gcount() != static_cast<std::streamsize>(img.data().size())) {
        throw ImageError("truncated PPM data");
    }
    return img;
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ImageError("cannot open " + path.string());
    }
    return read_ppm(is);
}

HslPixel rgb_to_hsl(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const int mx = std::max({r8, g8, b8});
    const int mn = std::min({r8, g8, b8});
    HslPixel out;
    out.lightness = (mx + mn) / 510.0;
    if (mx == mn) {
        return out;
    }
    const double d = (mx - mn) / 255.0;
    out.saturation = std::min(1.0, d / (1.0 - std::abs(2.0 * out.lightness - 1.0)));
    const double r = r8 / 255.0;
    const double g = g8 / 255.0;
    const double b = b8 / 255.0;
    double h = 0.0;
    if (mx == r8) {
        h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g8) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.hue_deg = h;
    return out;
}

}  // namespace heliotrack
