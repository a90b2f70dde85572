#pragma once

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "glyphforge/errors.hpp"
#include "glyphforge/image.hpp"

namespace glyphforge {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open '" + path + "'");
    return f;
}

// 8-bit interleaved pixels, 1 or 3 channels.
struct RawImage {
    std::size_t h = 0, w = 0, channels = 0;
    std::vector<unsigned char> data;
};

inline RawImage decode_png(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed for '" + path + "'");
    }
    RawImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed for '" + path + "'");
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_PALETTE) png_set_expand(png);
    png_read_update_info(png, info);

    img.h = png_get_image_height(png, info);
    img.w = png_get_image_width(png, info);
    img.channels = png_get_channels(png, info);
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG channel count in '" + path + "'");
    }
    img.data.resize(img.h * img.w * img.channels);
    rows.resize(img.h);
    for (std::size_t y = 0; y < img.h; ++y)
        rows[y] = img.data.data() + y * img.w * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

inline RawImage decode_jpeg(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = &jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("JPEG decode failed for '" + path + "'");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    RawImage img;
    img.h = cinfo.output_height;
    img.w = cinfo.output_width;
    img.channels = 3;
    img.data.resize(img.h * img.w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = img.data.data() + cinfo.output_scanline * img.w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

} // namespace detail

/// Decodes a PNG or JPEG file (sniffed by signature) into [h,w,1] grayscale
/// in [0,1]. RGB converts via luminance 0.299R + 0.587G + 0.114B.
inline Pixels decode_image(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    unsigned char sig[8] = {};
    const std::size_t got = std::fread(sig, 1, 8, f.get());
    std::rewind(f.get());

    detail::RawImage raw;
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) {
        raw = detail::decode_png(f.get(), path);
    } else if (got >= 2 && sig[0] == 0xFF && sig[1] == 0xD8) {
        raw = detail::decode_jpeg(f.get(), path);
    } else {
        throw IoError("'" + path + "' is neither PNG nor JPEG");
    }

    auto out = Pixels::zeros({raw.h, raw.w, 1});
    if (raw.channels == 1) {
        for (std::size_t i = 0; i < raw.h * raw.w; ++i)
            out[i] = static_cast<float>(raw.data[i] / 255.0);
    } else {
        for (std::size_t i = 0; i < raw.h * raw.w; ++i) {
            const unsigned char* px = raw.data.data() + i * 3;
            out[i] = static_cast<float>((0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0);
        }
    }
    return out;
}

/// Writes [h,w,1] grayscale in [0,1] as an 8-bit gray PNG
/// (round(clamp(p) * 255)).
inline void encode_png(const std::string& path, const Pixels& img) {
    if (img.rank() != 3 || img.extent(2) != 1)
        throw ShapeError("encode_png expects [h,w,1] grayscale, got " + shape_str(img.shape()));
    const std::size_t h = img.extent(0), w = img.extent(1);
    std::vector<unsigned char> bytes(h * w);
    for (std::size_t i = 0; i < h * w; ++i)
        bytes[i] = static_cast<unsigned char>(
            std::lround(std::min(1.0f, std::max(0.0f, img[i])) * 255.0f));

    auto f = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed for '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < h; ++y)
        png_write_row(png, bytes.data() + y * w);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace glyphforge
