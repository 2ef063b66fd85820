// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace s2t {

/// 8-bit grayscale image; for masks, nonzero = foreground.
struct Image8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    Image8() = default;
    Image8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    bool foreground(int x, int y) const { return at(x, y) != 0; }

    std::size_t count_nonzero() const;
};

/// Reads an 8-bit grayscale PNG or PGM (P5), dispatching on file magic.
/// Colour PNGs are converted to grayscale; 16-bit inputs are rejected.
Image8 load_image(const std::string& path);

void save_png(const Image8& image, const std::string& path);
void save_pgm(const Image8& image, const std::string& path);

/// Binary dilation by a disc of the given pixel radius (Euclidean).
/// radius 0 is the identity.
Image8 dilate(const Image8& mask, int radius);

}  // namespace s2t
