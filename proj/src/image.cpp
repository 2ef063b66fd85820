// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/image.hpp"

#include "splat2twin/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

namespace s2t {

std::size_t Image8::count_nonzero() const {
    return std::size_t(std::count_if(pixels.begin(), pixels.end(),
                                     [](std::uint8_t p) { return p != 0; }));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image8 load_png(const std::string& path, FilePtr file) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError(path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": PNG decode failed");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int colour = png_get_color_type(png, info);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw SchemaError(path + ": 16-bit PNG is unsupported; masks are 8-bit");
    }
    if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (colour == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (colour & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (colour & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image8 image{int(w), int(h)};
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = image.pixels.data() + std::size_t(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

Image8 load_pgm(const std::string& path, FilePtr file) {
    std::FILE* f = file.get();
    auto next_token = [&](char* buf, std::size_t cap) {
        int c;
        do {
            c = std::fgetc(f);
            if (c == '#') {  // comment to end of line
                while (c != '\n' && c != EOF) c = std::fgetc(f);
            }
        } while (c == ' ' || c == '\t' || c == '\n' || c == '\r');
        std::size_t n = 0;
        while (c != EOF && c != ' ' && c != '\t' && c != '\n' && c != '\r' && n + 1 < cap) {
            buf[n++] = char(c);
            c = std::fgetc(f);
        }
        buf[n] = '\0';
        return n > 0;
    };
    char tok[32];
    if (!next_token(tok, sizeof tok) || std::strcmp(tok, "P5") != 0)
        throw SchemaError(path + ": not a binary PGM (P5) file");
    long w = 0, h = 0, maxval = 0;
    if (!next_token(tok, sizeof tok)) throw SchemaError(path + ": PGM missing width");
    w = std::strtol(tok, nullptr, 10);
    if (!next_token(tok, sizeof tok)) throw SchemaError(path + ": PGM missing height");
    h = std::strtol(tok, nullptr, 10);
    if (!next_token(tok, sizeof tok)) throw SchemaError(path + ": PGM missing maxval");
    maxval = std::strtol(tok, nullptr, 10);
    if (w <= 0 || h <= 0) throw SchemaError(path + ": non-positive PGM dimensions");
    if (maxval <= 0 || maxval > 255) throw SchemaError(path + ": PGM maxval must be <= 255");
    Image8 image{int(w), int(h)};
    const std::size_t want = image.pixels.size();
    if (std::fread(image.pixels.data(), 1, want, f) != want)
        throw IoError(path + ": truncated PGM payload");
    return image;
}

}  // namespace

Image8 load_image(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError(path + ": cannot open for reading");
    unsigned char magic[8] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof magic, file.get());
    std::rewind(file.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(path, std::move(file));
    if (got >= 2 && magic[0] == 'P' && magic[1] == '5') return load_pgm(path, std::move(file));
    throw SchemaError(path + ": unrecognized image format (expected PNG or P5 PGM)");
}

void save_png(const Image8& image, const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError(path + ": cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError(path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path + ": PNG encode failed");
    }
    png_init_io(png, file.get());
    // Fixed encoder settings keep output bytes reproducible run to run.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, png_uint_32(image.width), png_uint_32(image.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y)
        rows[y] = const_cast<png_bytep>(image.pixels.data() + std::size_t(y) * image.width);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pgm(const Image8& image, const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError(path + ": cannot open for writing");
    std::fprintf(file.get(), "P5\n%d %d\n255\n", image.width, image.height);
    if (std::fwrite(image.pixels.data(), 1, image.pixels.size(), file.get()) !=
        image.pixels.size())
        throw IoError(path + ": write failed");
}

Image8 dilate(const Image8& mask, int radius) {
    if (radius <= 0) return mask;
    Image8 out(mask.width, mask.height);
    // Precompute the disc footprint once.
    std::vector<std::pair<int, int>> disc;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) disc.emplace_back(dx, dy);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.foreground(x, y)) continue;
            for (const auto& [dx, dy] : disc) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < mask.width && ny >= 0 && ny < mask.height)
                    out.at(nx, ny) = 255;
            }
        }
    }
    return out;
}

}  // namespace s2t
