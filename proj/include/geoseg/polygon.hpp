#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"

namespace geoseg {

struct Point2d {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2d&, const Point2d&) = default;
};

/// Closed vertex loop; the closing edge back to the first vertex is implicit.
struct Ring {
    std::vector<Point2d> pts;

    friend bool operator==(const Ring&, const Ring&) = default;
};

/// First ring is the exterior, further rings are holes. Fill is even-odd, so
/// nested and disjoint rings both behave as expected.
struct Polygon {
    std::vector<Ring> rings;

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Scanline even-odd fill sampled at pixel centers (x+0.5, y+0.5). Vertices
/// outside the raster are clamped to its rectangle first. Rings with fewer
/// than 3 vertices are ignored; a polygon with no usable ring is an error.
inline PixelMask rasterize(const Polygon& poly, int width, int height) {
    if (width <= 0 || height <= 0) throw Error("raster dimensions must be positive");

    std::vector<Ring> rings;
    for (const auto& ring : poly.rings) {
        if (ring.pts.size() < 3) continue;
        Ring clamped;
        clamped.pts.reserve(ring.pts.size());
        for (const auto& p : ring.pts)
            clamped.pts.push_back({std::clamp(p.x, 0.0, static_cast<double>(width)),
                                   std::clamp(p.y, 0.0, static_cast<double>(height))});
        rings.push_back(std::move(clamped));
    }
    if (rings.empty()) throw Error("degenerate geometry");

    std::vector<std::uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
    std::vector<double> crossings;
    for (int y = 0; y < height; ++y) {
        const double yc = y + 0.5;
        crossings.clear();
        for (const auto& ring : rings) {
            const std::size_t n = ring.pts.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Point2d& p = ring.pts[i];
                const Point2d& q = ring.pts[(i + 1) % n];
                // Half-open in y so shared vertices count once.
                if ((p.y <= yc && q.y > yc) || (q.y <= yc && p.y > yc)) {
                    const double t = (yc - p.y) / (q.y - p.y);
                    crossings.push_back(p.x + t * (q.x - p.x));
                }
            }
        }
        std::sort(crossings.begin(), crossings.end());
        std::uint8_t* row = bits.data() + static_cast<std::size_t>(y) * width;
        for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
            // Pixel centers in [a, b).
            int first = static_cast<int>(std::ceil(crossings[i] - 0.5));
            int last = static_cast<int>(std::ceil(crossings[i + 1] - 0.5)) - 1;
            first = std::max(first, 0);
            last = std::min(last, width - 1);
            for (int x = first; x <= last; ++x) row[x] = 1;
        }
    }
    return PixelMask::from_bits(width, height, bits);
}

}  // namespace geoseg
