#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "glyphforge/dataset.hpp"
#include "glyphforge/image.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge {

namespace detail {

// 5x7 lowercase letterforms; '#' is ink. Deliberately blocky: the renderer
// smooths, jitters, and noises them into handwriting-like samples.
inline const std::array<std::array<const char*, 7>, 26>& glyph_rows() {
    static const std::array<std::array<const char*, 7>, 26> rows = {{
        {".....", ".....", ".###.", "....#", ".####", "#...#", ".####"},  // a
        {"#....", "#....", "####.", "#...#", "#...#", "#...#", "####."},  // b
        {".....", ".....", ".####", "#....", "#....", "#....", ".####"},  // c
        {"....#", "....#", ".####", "#...#", "#...#", "#...#", ".####"},  // d
        {".....", ".....", ".###.", "#...#", "#####", "#....", ".###."},  // e
        {"..##.", ".#..#", ".#...", "####.", ".#...", ".#...", ".#..."},  // f
        {".....", ".####", "#...#", "#...#", ".####", "....#", ".###."},  // g
        {"#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#"},  // h
        {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."},  // i
        {"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."},  // j
        {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."},  // k
        {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},  // l
        {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#"},  // m
        {".....", ".....", "####.", "#...#", "#...#", "#...#", "#...#"},  // n
        {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."},  // o
        {".....", "####.", "#...#", "#...#", "####.", "#....", "#...."},  // p
        {".....", ".####", "#...#", "#...#", ".####", "....#", "....#"},  // q
        {".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."},  // r
        {".....", ".....", ".####", "#....", ".###.", "....#", "####."},  // s
        {".#...", ".#...", "####.", ".#...", ".#...", ".#..#", "..##."},  // t
        {".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####"},  // u
        {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."},  // v
        {".....", ".....", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."},  // w
        {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"},  // x
        {".....", "#...#", "#...#", "#...#", ".####", "....#", ".###."},  // y
        {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"},  // z
    }};
    return rows;
}

// Bilinear sample of the 5x7 ink mask at fractional (row, col); outside is 0.
inline double sample_mask(int label, double v, double u) {
    const auto& rows = glyph_rows()[static_cast<std::size_t>(label)];
    auto cell = [&](int r, int c) -> double {
        if (r < 0 || r >= 7 || c < 0 || c >= 5) return 0.0;
        return rows[static_cast<std::size_t>(r)][c] == '#' ? 1.0 : 0.0;
    };
    const double fr = std::floor(v), fc = std::floor(u);
    const int r0 = static_cast<int>(fr), c0 = static_cast<int>(fc);
    const double wr = v - fr, wc = u - fc;
    return (1 - wr) * (1 - wc) * cell(r0, c0) + (1 - wr) * wc * cell(r0, c0 + 1) +
           wr * (1 - wc) * cell(r0 + 1, c0) + wr * wc * cell(r0 + 1, c0 + 1);
}

} // namespace detail

struct GlyphStyle {
    double min_scale = 0.72, max_scale = 0.98;  // glyph box as a canvas fraction
    double max_shift = 0.08;                    // translation, canvas fraction
    double max_tilt_deg = 8.0;
    double min_ink = 0.65, max_ink = 0.95;      // stroke darkness
    double noise = 0.05;                        // uniform pixel noise amplitude
};

/// One white-background dark-ink character image with per-sample jitter in
/// placement, scale, tilt, stroke darkness, and pixel noise.
inline Pixels render_glyph(int label, std::size_t size, Rng& rng, const GlyphStyle& style = {}) {
    if (label < 0 || label >= 26) throw DataError("glyph label out of range");
    const double scale = rng.uniform(style.min_scale, style.max_scale);
    const double shift_x = rng.uniform(-style.max_shift, style.max_shift) * static_cast<double>(size);
    const double shift_y = rng.uniform(-style.max_shift, style.max_shift) * static_cast<double>(size);
    const double tilt = rng.uniform(-style.max_tilt_deg, style.max_tilt_deg) * 3.14159265358979 / 180.0;
    const double ink = rng.uniform(style.min_ink, style.max_ink);
    const double ct = std::cos(tilt), st = std::sin(tilt);

    // Glyph box (5x7 aspect) centered on the jittered canvas center.
    const double box_h = scale * static_cast<double>(size);
    const double box_w = box_h * 5.0 / 7.0;
    const double cy = static_cast<double>(size) / 2.0 + shift_y;
    const double cx = static_cast<double>(size) / 2.0 + shift_x;

    auto img = Pixels::zeros({size, size, 1});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double ry = ct * dy - st * dx;
            const double rx = st * dy + ct * dx;
            const double v = (ry / box_h + 0.5) * 7.0 - 0.5;
            const double u = (rx / box_w + 0.5) * 5.0 - 0.5;
            const double m = detail::sample_mask(label, v, u);
            double value = 1.0 - ink * m;
            value += rng.uniform(-style.noise, style.noise);
            img[y * size + x] = detail::clamp01(static_cast<float>(value));
        }
    return img;
}

/// per_class samples for each of the 26 letters, deterministic in the seed.
/// Paths use the synth:// scheme so in-memory loaders can serve them.
inline std::vector<LabeledImage> synth_corpus(std::size_t per_class, std::size_t size,
                                              std::uint64_t seed, const GlyphStyle& style = {}) {
    std::vector<LabeledImage> out;
    out.reserve(per_class * 26);
    for (int label = 0; label < 26; ++label)
        for (std::size_t i = 0; i < per_class; ++i) {
            Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(label) * 1000003ULL + i);
            LabeledImage img;
            img.label = label;
            img.pixels = render_glyph(label, size, rng, style);
            img.path = "synth://" + std::string(1, static_cast<char>('a' + label)) + "/" +
                       std::to_string(i) + ".png";
            img.source = img.path;
            out.push_back(std::move(img));
        }
    return out;
}

} // namespace glyphforge
