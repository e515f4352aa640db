#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ldp/geometry.hpp"

namespace ldp {

// 8-bit grayscale image, row-major; 0 is ink, 255 is paper.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 255)
        : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

    uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
    void set(int x, int y, uint8_t v) { pixels[size_t(y) * width + x] = v; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }

    void fill_rect(const BBox& r, uint8_t v) {
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x) set(x, y, v);
    }

    bool operator==(const GrayImage&) const = default;
};

// Binary P5 PGM with the single-line header "P5 <w> <h> 255\n".
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

// Bilinear resize to an exact target size, rounding half-up.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

}  // namespace ldp
