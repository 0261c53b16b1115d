#pragma once

#include <cstdint>
#include <vector>

#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"

namespace geoseg {

/// Per-pixel reals in [0, 1], row-major.
struct ProbabilityMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

inline void validate_map(const ProbabilityMap& p) {
    if (p.width <= 0 || p.height <= 0) throw Error("probability map dimensions must be positive");
    if (p.values.size() != static_cast<std::size_t>(p.width) * p.height)
        throw Error("probability map value count does not match dimensions");
    for (float v : p.values)
        if (!(v >= 0.0f && v <= 1.0f)) throw Error("probability map value outside [0,1]");
}

/// True when every value is exactly 0 or 1 (an already-thresholded mask).
inline bool is_binary(const ProbabilityMap& p) {
    for (float v : p.values)
        if (v != 0.0f && v != 1.0f) return false;
    return true;
}

inline PixelMask to_mask(const ProbabilityMap& p) {
    std::vector<std::uint8_t> bits(p.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) bits[i] = p.values[i] > 0.5f ? 1 : 0;
    return PixelMask::from_bits(p.width, p.height, bits);
}

/// Pixel is foreground iff its value exceeds the mean of the window x window
/// neighborhood (clipped at the borders) minus offset. Mean filter by summed
/// area table.
inline PixelMask adaptive_threshold(const ProbabilityMap& p, int window, double offset) {
    validate_map(p);
    if (window < 3 || window % 2 == 0) throw Error("window must be odd and >= 3");
    if (window > p.width || window > p.height)
        throw Error("window exceeds map dimensions");

    const int w = p.width;
    const int h = p.height;
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row_sum = 0.0;
        for (int x = 0; x < w; ++x) {
            row_sum += p.at(x, y);
            sat[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                sat[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row_sum;
        }
    }
    const auto box_sum = [&](int x0, int y0, int x1, int y1) {  // inclusive corners
        return sat[static_cast<std::size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
               sat[static_cast<std::size_t>(y0) * (w + 1) + (x1 + 1)] -
               sat[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
               sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
    };

    const int half = window / 2;
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - half);
        const int y1 = std::min(h - 1, y + half);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - half);
            const int x1 = std::min(w - 1, x + half);
            const double mean = box_sum(x0, y0, x1, y1) /
                                (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
            if (p.at(x, y) > mean - offset) bits[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }
    return PixelMask::from_bits(w, h, bits);
}

}  // namespace geoseg
