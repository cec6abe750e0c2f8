#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mgd/common.hpp"

namespace mgd {

// Interleaved 8-bit raster, 1 (gray) or 3 (RGB) channels.
struct Image {
    int w = 0, h = 0, c = 0;
    std::vector<uint8_t> px;

    Image() = default;
    Image(int w_, int h_, int c_, uint8_t fill = 0) : w(w_), h(h_), c(c_), px(size_t(w_) * h_ * c_, fill) {}

    uint8_t& at(int x, int y, int ch = 0) { return px[(size_t(y) * w + x) * c + ch]; }
    uint8_t at(int x, int y, int ch = 0) const { return px[(size_t(y) * w + x) * c + ch]; }

    void set_rgb(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
        at(x, y, 0) = r;
        at(x, y, 1) = g;
        at(x, y, 2) = b;
    }

    bool operator==(const Image& o) const { return w == o.w && h == o.h && c == o.c && px == o.px; }
};

namespace detail {
struct PngCloser {
    FILE* f = nullptr;
    ~PngCloser() {
        if (f) std::fclose(f);
    }
};
}  // namespace detail

inline void png_write(const std::string& path, const Image& img) {
    if (img.c != 1 && img.c != 3) throw IoError("png_write: unsupported channel count " + std::to_string(img.c));
    detail::PngCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw IoError("png_write: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png_write: libpng init failed for " + path);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png_write: encode failed for " + path);
    }
    png_init_io(png, fc.f);
    int color = img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, img.w, img.h, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // Fixed encoder settings keep dataset builds byte-identical.
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.h);
    for (int y = 0; y < img.h; ++y) rows[y] = const_cast<uint8_t*>(&img.px[size_t(y) * img.w * img.c]);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline Image png_read(const std::string& path) {
    detail::PngCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw MissingArtifact("png_read: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png_read: libpng init failed for " + path);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png_read: decode failed for " + path);
    }
    png_init_io(png, fc.f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png_read: unsupported channel count in " + path);
    }
    Image img(int(w), int(h), channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = &img.px[size_t(y) * w * channels];
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw MissingArtifact("cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    long n = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> buf(static_cast<size_t>(n));
    if (n > 0 && std::fread(buf.data(), 1, size_t(n), f) != size_t(n)) {
        std::fclose(f);
        throw IoError("short read on " + path);
    }
    std::fclose(f);
    return buf;
}

inline uint64_t file_hash(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return fnv1a(bytes.data(), bytes.size());
}

}  // namespace mgd
