#include "ldp/image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ldp {

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5 " << img.width << " " << img.height << " 255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("malformed PGM header in " + path.string());
    in.get();  // single whitespace after maxval
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (in.gcount() != std::streamsize(img.pixels.size()))
        throw std::runtime_error("truncated PGM payload in " + path.string());
    return img;
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0)
        throw std::runtime_error("resize_bilinear: non-positive target size");
    if (out_w == img.width && out_h == img.height) return img;

    GrayImage out(out_w, out_h);
    const double sx = double(img.width) / double(out_w);
    const double sy = double(img.height) / double(out_h);
    for (int oy = 0; oy < out_h; ++oy) {
        // Center-aligned sample positions.
        const double fy = (oy + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double wy = fy - y0;
        int y1 = y0 + 1;
        if (y0 < 0) { y0 = 0; y1 = 0; wy = 0.0; }
        if (y1 >= img.height) { y1 = img.height - 1; if (y0 > y1) { y0 = y1; wy = 0.0; } }
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = (ox + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double wx = fx - x0;
            int x1 = x0 + 1;
            if (x0 < 0) { x0 = 0; x1 = 0; wx = 0.0; }
            if (x1 >= img.width) { x1 = img.width - 1; if (x0 > x1) { x0 = x1; wx = 0.0; } }
            const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
            const double bot = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
            const double v = (1.0 - wy) * top + wy * bot;
            const int q = int(std::floor(v + 0.5));  // round half-up
            out.set(ox, oy, uint8_t(q < 0 ? 0 : (q > 255 ? 255 : q)));
        }
    }
    return out;
}

}  // namespace ldp
