#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "heliotrack/image.hpp"
#include "oracles.hpp"

using namespace heliotrack;

TEST(ImageTest, FillAndAccess) {
    Image img(4, 3, {1, 2, 3});
    EXPECT_EQ(img.at(3, 2), (Rgb{1, 2, 3}));
    img.set(1, 1, {9, 8, 7});
    EXPECT_EQ(img.at(1, 1), (Rgb{9, 8, 7}));
    EXPECT_EQ(img.data().size(), 36u);
}

TEST(ImageTest, RejectsNonPositiveSize) { EXPECT_THROW(Image(0, 5), ImageError); }

TEST(PpmTest, RoundTrip) {
    Image img(7, 5);
    std::mt19937 rng(3);
    for (auto& b : img.data()) b = static_cast<std::uint8_t>(rng());
    std::stringstream ss;
    write_ppm(ss, img);
    EXPECT_EQ(ss.str().substr(0, 2), "P6");
    EXPECT_EQ(read_ppm(ss), img);
    EXPECT_EQ(encode_ppm(img), ss.str());
}

TEST(PpmTest, HeaderWithComment) {
    std::stringstream ss;
    ss << "P6\n# made by hand\n2 1\n255\n";
    ss.write("\x01\x02\x03\x04\x05\x06", 6);
    const Image img = read_ppm(ss);
    EXPECT_EQ(img.width(), 2);
    EXPECT_EQ(img.at(1, 0), (Rgb{4, 5, 6}));
}

TEST(PpmTest, MalformedInputThrows) {
    std::stringstream ascii("P3\n1 1\n255\n0 0 0\n");
    EXPECT_THROW(read_ppm(ascii), ImageError);
    std::stringstream deep("P6\n1 1\n65535\n");
    EXPECT_THROW(read_ppm(deep), ImageError);
    std::stringstream truncated("P6\n4 4\n255\nabc");
    EXPECT_THROW(read_ppm(truncated), ImageError);
    EXPECT_THROW(read_ppm(std::filesystem::path("/nonexistent/x.ppm")), ImageError);
}

TEST(HslTest, PureRed) {
    const HslPixel p = rgb_to_hsl(255, 0, 0);
    EXPECT_NEAR(p.hue_deg, 0.0, 1e-12);
    EXPECT_NEAR(p.saturation, 1.0, 1e-12);
    EXPECT_NEAR(p.lightness, 0.5, 1e-12);
}

TEST(HslTest, White) {
    const HslPixel p = rgb_to_hsl(255, 255, 255);
    EXPECT_NEAR(p.saturation, 0.0, 1e-12);
    EXPECT_NEAR(p.lightness, 1.0, 1e-12);
}

TEST(HslTest, Grey) {
    const HslPixel p = rgb_to_hsl(128, 128, 128);
    EXPECT_NEAR(p.saturation, 0.0, 1e-12);
    EXPECT_NEAR(p.lightness, 0.502, 1e-3);
}

TEST(HslTest, PrimaryHues) {
    EXPECT_NEAR(rgb_to_hsl(0, 255, 0).hue_deg, 120.0, 1e-9);
    EXPECT_NEAR(rgb_to_hsl(0, 0, 255).hue_deg, 240.0, 1e-9);
    EXPECT_NEAR(rgb_to_hsl(255, 0, 255).hue_deg, 300.0, 1e-9);
}

TEST(HslTest, RandomColoursWithinRangeAndLightnessPermutationInvariant) {
    std::mt19937 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const Rgb c{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
        const HslPixel p = rgb_to_hsl(c);
        EXPECT_GE(p.hue_deg, 0.0);
        EXPECT_LT(p.hue_deg, 360.0);
        EXPECT_GE(p.saturation, 0.0);
        EXPECT_LE(p.saturation, 1.0);
        EXPECT_NEAR(p.lightness, oracle::lightness(c), 1e-12);
        EXPECT_DOUBLE_EQ(rgb_to_hsl(c.b, c.r, c.g).lightness, p.lightness);
    }
}
