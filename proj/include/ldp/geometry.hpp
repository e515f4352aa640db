#pragma once

#include <algorithm>
#include <string>

namespace ldp {

// Pixel-space box, origin top-left, half-open on the right and bottom.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool valid() const { return x0 < x1 && y0 < y1 && x0 >= 0 && y0 >= 0; }

    bool contains(const BBox& inner) const {
        return inner.x0 >= x0 && inner.y0 >= y0 && inner.x1 <= x1 && inner.y1 <= y1;
    }

    bool intersects(const BBox& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }

    bool y_overlaps(const BBox& o) const { return y0 < o.y1 && o.y0 < y1; }

    BBox union_with(const BBox& o) const {
        return {std::min(x0, o.x0), std::min(y0, o.y0),
                std::max(x1, o.x1), std::max(y1, o.y1)};
    }

    bool operator==(const BBox&) const = default;

    // Lexicographic; boxes in a valid document never tie (no overlaps).
    bool operator<(const BBox& o) const {
        if (x0 != o.x0) return x0 < o.x0;
        if (y0 != o.y0) return y0 < o.y0;
        if (x1 != o.x1) return x1 < o.x1;
        return y1 < o.y1;
    }

    std::string str() const {
        return "[" + std::to_string(x0) + "," + std::to_string(y0) + "," +
               std::to_string(x1) + "," + std::to_string(y1) + "]";
    }
};

}  // namespace ldp
