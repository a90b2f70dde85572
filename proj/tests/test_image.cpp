#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "glyphforge/dataset.hpp"
#include "glyphforge/image.hpp"
#include "glyphforge/image_io.hpp"
#include "glyphforge/rng.hpp"
#include "support/image_fixtures.hpp"

using namespace glyphforge;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::path(GLYPHFORGE_TEST_TMP) / "image";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Pixels random_image(std::size_t h, std::size_t w, Rng& rng) {
    auto img = Pixels::zeros({h, w, 1});
    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<float>(rng.uniform());
    return img;
}

} // namespace

TEST(ImageIo, PureWhiteAndBlackPng) {
    const auto white_path = (tmp_dir() / "white.png").string();
    encode_png(white_path, Pixels::fill({5, 7, 1}, 1.0f));
    auto white = decode_image(white_path);
    ASSERT_EQ(white.shape(), (Shape{5, 7, 1}));
    for (std::size_t i = 0; i < white.numel(); ++i) EXPECT_EQ(white[i], 1.0f);

    const auto black_path = (tmp_dir() / "black.png").string();
    encode_png(black_path, Pixels::zeros({4, 4, 1}));
    auto black = decode_image(black_path);
    for (std::size_t i = 0; i < black.numel(); ++i) EXPECT_EQ(black[i], 0.0f);
}

TEST(ImageIo, RgbConvertsToLuminance) {
    const auto path = (tmp_dir() / "red.png").string();
    std::vector<unsigned char> rgb(2 * 2 * 3, 0);
    for (int i = 0; i < 4; ++i) rgb[i * 3] = 255;  // pure red
    fixtures::write_png_rgb(path, 2, 2, rgb);
    auto img = decode_image(path);
    for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_FLOAT_EQ(img[i], 0.299f);
}

TEST(ImageIo, JpegDecodes) {
    const auto path = (tmp_dir() / "gray.jpg").string();
    std::vector<unsigned char> gray(8 * 8, 255);
    fixtures::write_jpeg_gray(path, 8, 8, gray);
    auto img = decode_image(path);
    ASSERT_EQ(img.shape(), (Shape{8, 8, 1}));
    for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_NEAR(img[i], 1.0f, 0.02f);
}

TEST(ImageIo, UnreadableFileIsIoError) {
    EXPECT_THROW(decode_image((tmp_dir() / "missing.png").string()), IoError);
    const auto bogus = (tmp_dir() / "bogus.png").string();
    std::ofstream(bogus) << "not an image";
    EXPECT_THROW(decode_image(bogus), IoError);
}

TEST(ImageIo, PngRoundTripIsExact) {
    Rng rng(31);
    auto img = random_image(9, 13, rng);
    // Quantize first so the round trip is exact.
    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<float>(std::lround(img[i] * 255.0f)) / 255.0f;
    const auto path = (tmp_dir() / "roundtrip.png").string();
    encode_png(path, img);
    auto back = decode_image(path);
    ASSERT_EQ(back.shape(), img.shape());
    for (std::size_t i = 0; i < img.numel(); ++i)
        EXPECT_NEAR(back[i], img[i], 1e-6f);
}

TEST(Autocrop, NoInkReturnsInputUnchanged) {
    auto img = Pixels::fill({10, 10, 1}, 1.0f);
    EXPECT_EQ(autocrop(img, 0.5f), img);
}

TEST(Autocrop, SingleDarkPixelGivesFiveByFive) {
    auto img = Pixels::fill({100, 100, 1}, 1.0f);
    img[50 * 100 + 50] = 0.0f;
    auto out = autocrop(img, 0.5f);
    ASSERT_EQ(out.shape(), (Shape{5, 5, 1}));
    EXPECT_EQ(out[2 * 5 + 2], 0.0f);
}

TEST(Autocrop, TightImageOnlyClampsMargin) {
    // Ink everywhere: bounding box is the whole image, margin clamps away.
    auto img = Pixels::zeros({6, 8, 1});
    EXPECT_EQ(autocrop(img, 0.5f), img);
}

TEST(Autocrop, LightInkPolarity) {
    auto img = Pixels::zeros({20, 20, 1});  // black background
    img[7 * 20 + 9] = 1.0f;                 // white ink
    auto out = autocrop(img, 0.5f, /*dark_ink=*/false);
    EXPECT_EQ(out.shape(), (Shape{5, 5, 1}));
}

TEST(Resize, ConstantStaysConstant) {
    auto img = Pixels::fill({13, 9, 1}, 0.37f);
    auto out = resize_bilinear(img, 224, 224);
    ASSERT_EQ(out.shape(), (Shape{224, 224, 1}));
    for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_FLOAT_EQ(out[i], 0.37f);
}

TEST(Resize, SameSizeIsBitExactIdentity) {
    Rng rng(7);
    auto img = random_image(224, 224, rng);
    EXPECT_EQ(resize_bilinear(img, 224, 224), img);
}

TEST(Resize, CheckerboardStaysWithinSourceRange) {
    Pixels img({2, 2, 1}, {0.2f, 0.8f, 0.8f, 0.2f});
    auto out = resize_bilinear(img, 8, 8);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        EXPECT_GE(out[i], 0.2f - 1e-6f);
        EXPECT_LE(out[i], 0.8f + 1e-6f);
    }
    // Dead center mixes all four corners equally: convex combination.
    // With pixel-center mapping, output (3,3) samples source (0.375, 0.375):
    // weights .625^2, .625*.375, .375*.625, .375^2 over {0.2,0.8,0.8,0.2}.
    const double w00 = 0.625 * 0.625, w01 = 0.625 * 0.375, w10 = 0.375 * 0.625,
                 w11 = 0.375 * 0.375;
    const double expect = w00 * 0.2 + w01 * 0.8 + w10 * 0.8 + w11 * 0.2;
    EXPECT_NEAR(out[3 * 8 + 3], expect, 1e-6);
}

TEST(Brightness, ScalesAndClamps) {
    auto img = Pixels::fill({3, 3, 1}, 0.4f);
    auto out = adjust_brightness(img, 2.0f);
    for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_FLOAT_EQ(out[i], 0.8f);
    auto clamped = adjust_brightness(img, 10.0f);
    for (std::size_t i = 0; i < clamped.numel(); ++i) EXPECT_EQ(clamped[i], 1.0f);
    EXPECT_THROW(adjust_brightness(img, 0.0f), ConfigError);
}

TEST(Contrast, ZeroFactorCollapsesToMean) {
    Rng rng(11);
    auto img = random_image(6, 6, rng);
    double sum = 0;
    for (std::size_t i = 0; i < img.numel(); ++i) sum += img[i];
    const float mean = static_cast<float>(sum / img.numel());
    auto out = adjust_contrast(img, 1e-9f);  // factor ~0 pulls everything to the mean
    for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_NEAR(out[i], mean, 1e-6f);
}

TEST(Identities, AllFourAugmentationsAtNeutralFactors) {
    Rng rng(13);
    auto img = random_image(17, 21, rng);
    EXPECT_EQ(adjust_brightness(img, 1.0f), img);
    EXPECT_EQ(adjust_contrast(img, 1.0f), img);
    EXPECT_EQ(rotate(img, 0.0), img);
    EXPECT_EQ(adjust_sharpness(img, 1.0f), img);
}

TEST(Rotate, QuarterTurnMovesMarkerCounterClockwise) {
    // 5x5 white image, dark marker at top-center (x=2, y=0) plus a second
    // marker at (x=3, y=0) to make the pattern asymmetric.
    auto img = Pixels::fill({5, 5, 1}, 1.0f);
    img[0 * 5 + 2] = 0.0f;
    img[0 * 5 + 3] = 0.2f;
    auto out = rotate(img, 90.0);
    // Content (qx,qy) lands at (cx + (qy-cy), cy - (qx-cx)):
    // (2,0) -> (0,2) and (3,0) -> (0,1); the top edge becomes the left edge.
    EXPECT_NEAR(out[2 * 5 + 0], 0.0f, 1e-5f);
    EXPECT_NEAR(out[1 * 5 + 0], 0.2f, 1e-5f);
    EXPECT_NEAR(out[0 * 5 + 2], 1.0f, 1e-5f);
}

TEST(Rotate, ConstantWhiteImageInvariant) {
    auto img = Pixels::fill({9, 9, 1}, 1.0f);
    for (double deg : {7.3, 45.0, -120.0, 180.0}) {
        auto out = rotate(img, deg);
        for (std::size_t i = 0; i < out.numel(); ++i)
            EXPECT_NEAR(out[i], 1.0f, 1e-6f) << "deg " << deg;
    }
}

TEST(Sharpness, FactorZeroIsBoxBlur) {
    Pixels img({3, 3, 1}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f});
    auto out = adjust_sharpness(img, 0.0f);
    // Hand-computed 9-tap means with replicated borders.
    auto rep = [&](int y, int x) {
        y = std::clamp(y, 0, 2);
        x = std::clamp(x, 0, 2);
        return img[y * 3 + x];
    };
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            float acc = 0.0f;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) acc += rep(y + dy, x + dx);
            EXPECT_NEAR(out[y * 3 + x], acc / 9.0f, 1e-6f);
        }
}

TEST(Sharpness, ConstantImageFixedPoint) {
    auto img = Pixels::fill({7, 5, 1}, 0.42f);
    for (float f : {0.0f, 0.5f, 2.0f, 7.0f}) {
        auto out = adjust_sharpness(img, f);
        for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_NEAR(out[i], 0.42f, 1e-6f);
    }
}

TEST(RangeProperty, RandomFactorsStayInUnitInterval) {
    Rng rng(17);
    for (int round = 0; round < 25; ++round) {
        auto img = random_image(8, 8, rng);
        auto check = [&](const Pixels& p) {
            for (std::size_t i = 0; i < p.numel(); ++i) {
                ASSERT_GE(p[i], 0.0f);
                ASSERT_LE(p[i], 1.0f);
            }
        };
        check(adjust_brightness(img, static_cast<float>(rng.uniform(0.05, 4.0))));
        check(adjust_contrast(img, static_cast<float>(rng.uniform(0.05, 4.0))));
        check(rotate(img, rng.uniform(-180.0, 180.0)));
        check(adjust_sharpness(img, static_cast<float>(rng.uniform(0.0, 5.0))));
        check(resize_bilinear(img, 5 + rng.uniform_index(20), 5 + rng.uniform_index(20)));
    }
}
