#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "glyphforge/errors.hpp"
#include "glyphforge/tensor.hpp"

namespace glyphforge {

/// Grayscale image: Tensor<float> [h,w,1], values in [0,1], white background.
using Pixels = Tensor<float>;

namespace detail {

inline void check_image(const Pixels& img, const char* op) {
    if (img.rank() != 3 || img.extent(2) != 1)
        throw ShapeError(std::string(op) + " expects [h,w,1] grayscale, got " + shape_str(img.shape()));
}

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

// Bilinear sample with edge replication. sy/sx are source coordinates in
// pixel-center convention.
inline float sample_bilinear(const Pixels& img, double sy, double sx) {
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(img.extent(0));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(img.extent(1));
    const double fy = std::floor(sy), fx = std::floor(sx);
    const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(fy);
    const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(fx);
    const float wy = static_cast<float>(sy - fy);
    const float wx = static_cast<float>(sx - fx);
    auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        y = std::clamp<std::ptrdiff_t>(y, 0, h - 1);
        x = std::clamp<std::ptrdiff_t>(x, 0, w - 1);
        return img[static_cast<std::size_t>(y * w + x)];
    };
    return (1.0f - wy) * (1.0f - wx) * at(y0, x0) + (1.0f - wy) * wx * at(y0, x0 + 1) +
           wy * (1.0f - wx) * at(y0 + 1, x0) + wy * wx * at(y0 + 1, x0 + 1);
}

} // namespace detail

/// Tight bounding box of ink pixels plus a 2-pixel margin, clamped to the
/// image. Ink is intensity < threshold for dark-on-light input; a cleared
/// dark_ink flag inverts the test. Images with no ink come back unchanged.
inline Pixels autocrop(const Pixels& img, float threshold, bool dark_ink = true) {
    detail::check_image(img, "autocrop");
    if (!(threshold > 0.0f && threshold < 1.0f))
        throw ConfigError("autocrop threshold must be in (0,1)");
    const std::size_t h = img.extent(0), w = img.extent(1);
    std::size_t y0 = h, y1 = 0, x0 = w, x1 = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const float v = img[y * w + x];
            const bool ink = dark_ink ? v < threshold : v > threshold;
            if (ink) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
        }
    if (y0 > y1) return img;  // no ink
    const std::size_t margin = 2;
    y0 = y0 > margin ? y0 - margin : 0;
    x0 = x0 > margin ? x0 - margin : 0;
    y1 = std::min(h - 1, y1 + margin);
    x1 = std::min(w - 1, x1 + margin);
    const std::size_t ch = y1 - y0 + 1, cw = x1 - x0 + 1;
    auto out = Pixels::zeros({ch, cw, 1});
    for (std::size_t y = 0; y < ch; ++y)
        for (std::size_t x = 0; x < cw; ++x)
            out[y * cw + x] = img[(y0 + y) * w + (x0 + x)];
    return out;
}

/// Bilinear resize (pixel-center mapping, edges replicated). Resizing to the
/// source size is a bit-exact identity.
inline Pixels resize_bilinear(const Pixels& img, std::size_t out_h, std::size_t out_w) {
    detail::check_image(img, "resize");
    if (out_h == 0 || out_w == 0) throw ConfigError("resize target must be positive");
    const std::size_t h = img.extent(0), w = img.extent(1);
    auto out = Pixels::zeros({out_h, out_w, 1});
    const double sy_scale = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx_scale = static_cast<double>(w) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
            out[y * out_w + x] = detail::clamp01(detail::sample_bilinear(img, sy, sx));
        }
    }
    return out;
}

/// p' = clamp(p * factor).
inline Pixels adjust_brightness(const Pixels& img, float factor) {
    detail::check_image(img, "brightness");
    if (!(factor > 0.0f)) throw ConfigError("brightness factor must be > 0");
    if (factor == 1.0f) return img;
    auto out = Pixels::zeros_like(img);
    for (std::size_t i = 0; i < img.numel(); ++i)
        out[i] = detail::clamp01(img[i] * factor);
    return out;
}

/// p' = clamp(mean + (p - mean) * factor), mean over the whole image.
inline Pixels adjust_contrast(const Pixels& img, float factor) {
    detail::check_image(img, "contrast");
    if (!(factor > 0.0f)) throw ConfigError("contrast factor must be > 0");
    if (factor == 1.0f) return img;
    double sum = 0.0;
    for (std::size_t i = 0; i < img.numel(); ++i) sum += img[i];
    const float mean = static_cast<float>(sum / static_cast<double>(img.numel()));
    auto out = Pixels::zeros_like(img);
    for (std::size_t i = 0; i < img.numel(); ++i)
        out[i] = detail::clamp01(mean + (img[i] - mean) * factor);
    return out;
}

/// Rotation about the image center; positive degrees turn the content
/// counter-clockwise on screen (y down). Bilinear sampling, out-of-bounds
/// filled with white (1.0), output dimensions unchanged.
inline Pixels rotate(const Pixels& img, double degrees) {
    detail::check_image(img, "rotate");
    if (!(degrees >= -180.0 && degrees <= 180.0))
        throw ConfigError("rotation must be within [-180,180] degrees");
    if (degrees == 0.0) return img;
    const std::size_t h = img.extent(0), w = img.extent(1);
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    auto out = Pixels::zeros_like(img);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double sx = cx + c * dx - s * dy;
            const double sy = cy + s * dx + c * dy;
            float v;
            if (sy < -0.5 || sy > static_cast<double>(h) - 0.5 ||
                sx < -0.5 || sx > static_cast<double>(w) - 0.5) {
                v = 1.0f;  // background
            } else {
                v = detail::sample_bilinear(img, sy, sx);
            }
            out[y * w + x] = detail::clamp01(v);
        }
    return out;
}

/// Unsharp blend against a 3x3 box blur with replicated borders:
/// p' = clamp(blur + factor * (p - blur)). factor 1 returns the input
/// bit-exact, factor 0 is the plain blur.
inline Pixels adjust_sharpness(const Pixels& img, float factor) {
    detail::check_image(img, "sharpness");
    if (!(factor >= 0.0f)) throw ConfigError("sharpness factor must be >= 0");
    if (factor == 1.0f) return img;
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(img.extent(0));
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(img.extent(1));
    auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        y = std::clamp<std::ptrdiff_t>(y, 0, h - 1);
        x = std::clamp<std::ptrdiff_t>(x, 0, w - 1);
        return img[static_cast<std::size_t>(y * w + x)];
    };
    auto out = Pixels::zeros_like(img);
    for (std::ptrdiff_t y = 0; y < h; ++y)
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx)
                    acc += at(y + dy, x + dx);
            const float blur = acc / 9.0f;
            const float p = img[static_cast<std::size_t>(y * w + x)];
            out[static_cast<std::size_t>(y * w + x)] = detail::clamp01(blur + factor * (p - blur));
        }
    return out;
}

} // namespace glyphforge
