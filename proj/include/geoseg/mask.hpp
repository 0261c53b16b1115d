#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geoseg/error.hpp"

namespace geoseg {

/// Axis-aligned pixel rectangle, origin at the top-left corner.
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    friend bool operator==(const Box&, const Box&) = default;
};

/// Half-open foreground span [begin, end) in column-major linear pixel order.
struct Interval {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Binary raster region stored run-length encoded.
///
/// Runs are counts of pixels in column-major order (linear index = x*height + y),
/// alternating background/foreground with the first count background. Canonical
/// form: only the leading count may be zero and runs sum to width*height, so two
/// masks are equal iff their run vectors are equal.
class PixelMask {
public:
    PixelMask() = default;

    /// All-background mask.
    PixelMask(int width, int height) : width_(width), height_(height) {
        check_dims(width, height);
        runs_.push_back(total());
    }

    /// Decode RLE counts. Accepts non-canonical counts (embedded single zeros)
    /// and canonicalizes; rejects count sums that do not cover the raster.
    PixelMask(int width, int height, const std::vector<std::uint32_t>& counts)
        : width_(width), height_(height) {
        check_dims(width, height);
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
            if (counts[i] == 0 && counts[i + 1] == 0)
                throw Error("invalid RLE: consecutive zero counts");
        }
        for (auto c : counts) sum += c;
        if (sum != total())
            throw Error("invalid RLE: counts sum to " + std::to_string(sum) + ", expected " +
                        std::to_string(total()));
        std::vector<Interval> spans;
        std::uint32_t pos = 0;
        bool foreground = false;
        for (auto c : counts) {
            if (foreground && c > 0) spans.push_back({pos, pos + c});
            pos += c;
            foreground = !foreground;
        }
        assign_intervals(spans);
    }

    /// Build from a row-major bit grid (bits[y*width + x] != 0 means foreground).
    static PixelMask from_bits(int width, int height, std::span<const std::uint8_t> bits) {
        check_dims(width, height);
        if (bits.size() != static_cast<std::size_t>(width) * height)
            throw Error("bit grid size does not match dimensions");
        PixelMask m;
        m.width_ = width;
        m.height_ = height;
        std::vector<Interval> spans;
        for (int x = 0; x < width; ++x) {
            for (int y = 0; y < height; ++y) {
                if (!bits[static_cast<std::size_t>(y) * width + x]) continue;
                std::uint32_t idx = static_cast<std::uint32_t>(x) * height + y;
                if (!spans.empty() && spans.back().end == idx)
                    spans.back().end = idx + 1;
                else
                    spans.push_back({idx, idx + 1});
            }
        }
        m.assign_intervals(spans);
        return m;
    }

    /// Build from sorted, pairwise-disjoint column-major foreground spans.
    static PixelMask from_intervals(int width, int height, std::span<const Interval> spans) {
        check_dims(width, height);
        PixelMask m;
        m.width_ = width;
        m.height_ = height;
        std::vector<Interval> merged;
        std::uint32_t prev_end = 0;
        for (const auto& s : spans) {
            if (s.end <= s.begin) continue;
            if (s.begin < prev_end) throw Error("intervals not sorted/disjoint");
            if (s.end > m.total()) throw Error("interval exceeds raster extent");
            if (!merged.empty() && merged.back().end == s.begin)
                merged.back().end = s.end;
            else
                merged.push_back(s);
            prev_end = s.end;
        }
        m.assign_intervals(merged);
        return m;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint32_t total() const { return static_cast<std::uint32_t>(width_) * height_; }

    const std::vector<std::uint32_t>& runs() const { return runs_; }

    /// Foreground spans in column-major linear order.
    std::vector<Interval> intervals() const {
        std::vector<Interval> spans;
        spans.reserve(runs_.size() / 2);
        std::uint32_t pos = 0;
        bool foreground = false;
        for (auto c : runs_) {
            if (foreground) spans.push_back({pos, pos + c});
            pos += c;
            foreground = !foreground;
        }
        return spans;
    }

    std::int64_t area() const {
        std::int64_t a = 0;
        bool foreground = false;
        for (auto c : runs_) {
            if (foreground) a += c;
            foreground = !foreground;
        }
        return a;
    }

    bool empty() const { return area() == 0; }

    /// Row-major bit grid, one byte per pixel.
    std::vector<std::uint8_t> to_bits() const {
        std::vector<std::uint8_t> bits(total(), 0);
        for (const auto& s : intervals())
            for (std::uint32_t i = s.begin; i < s.end; ++i)
                bits[static_cast<std::size_t>(i % height_) * width_ + i / height_] = 1;
        return bits;
    }

    /// Tight bounding box of the foreground; zero-sized for an empty mask.
    Box bbox() const {
        int min_x = width_, min_y = height_, max_x = -1, max_y = -1;
        for (const auto& s : intervals()) {
            for (std::uint32_t col = s.begin / height_; col <= (s.end - 1) / height_; ++col) {
                std::uint32_t lo = std::max(s.begin, col * height_);
                std::uint32_t hi = std::min(s.end, (col + 1) * height_);
                if (lo >= hi) continue;
                int x = static_cast<int>(col);
                int y0 = static_cast<int>(lo - col * height_);
                int y1 = static_cast<int>(hi - 1 - col * height_);
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y0);
                max_y = std::max(max_y, y1);
            }
        }
        if (max_x < 0) return Box{0, 0, 0, 0};
        return Box{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
    }

    friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
    static void check_dims(int width, int height) {
        if (width <= 0 || height <= 0) throw Error("mask dimensions must be positive");
    }

    // Canonical runs from sorted disjoint non-adjacent intervals.
    void assign_intervals(const std::vector<Interval>& spans) {
        runs_.clear();
        std::uint32_t pos = 0;
        for (const auto& s : spans) {
            if (s.begin > pos || runs_.empty()) runs_.push_back(s.begin - pos);
            runs_.push_back(s.end - s.begin);
            pos = s.end;
        }
        if (runs_.empty() || pos < total()) runs_.push_back(total() - pos);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> runs_;
};

/// COCO uncompressed counts for a mask (column-major, leading count background).
inline const std::vector<std::uint32_t>& rle_encode(const PixelMask& m) { return m.runs(); }

/// Inverse of rle_encode.
inline PixelMask rle_decode(const std::vector<std::uint32_t>& counts, int width, int height) {
    return PixelMask(width, height, counts);
}

inline std::int64_t area(const PixelMask& m) { return m.area(); }

namespace detail {

inline void require_same_dims(const PixelMask& a, const PixelMask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw Error("mask dimension mismatch: " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
}

}  // namespace detail

inline std::int64_t intersection_area(const PixelMask& a, const PixelMask& b) {
    detail::require_same_dims(a, b);
    const auto ia = a.intervals();
    const auto ib = b.intervals();
    std::int64_t total = 0;
    std::size_t i = 0, j = 0;
    while (i < ia.size() && j < ib.size()) {
        std::uint32_t lo = std::max(ia[i].begin, ib[j].begin);
        std::uint32_t hi = std::min(ia[i].end, ib[j].end);
        if (lo < hi) total += hi - lo;
        if (ia[i].end < ib[j].end)
            ++i;
        else
            ++j;
    }
    return total;
}

/// Intersection over union. Undefined (error) when both masks are empty so that
/// callers must decide how to treat degenerate annotation pairs.
inline double iou(const PixelMask& a, const PixelMask& b) {
    detail::require_same_dims(a, b);
    const std::int64_t aa = a.area();
    const std::int64_t ab = b.area();
    if (aa == 0 && ab == 0) throw Error("undefined IOU for two empty masks");
    const std::int64_t inter = intersection_area(a, b);
    return static_cast<double>(inter) / static_cast<double>(aa + ab - inter);
}

/// Intersection over each mask's own area, keeping the larger ratio. Reaches 1
/// on containment where IOU stays small; used to decide annotation merges.
inline double max_overlap_ratio(const PixelMask& a, const PixelMask& b) {
    detail::require_same_dims(a, b);
    const std::int64_t aa = a.area();
    const std::int64_t ab = b.area();
    if (aa == 0 || ab == 0) throw Error("max_overlap_ratio of an empty mask");
    const std::int64_t inter = intersection_area(a, b);
    return std::max(static_cast<double>(inter) / static_cast<double>(aa),
                    static_cast<double>(inter) / static_cast<double>(ab));
}

inline PixelMask union_masks(std::span<const PixelMask> masks) {
    if (masks.empty()) throw Error("union of an empty mask list");
    for (std::size_t i = 1; i < masks.size(); ++i)
        detail::require_same_dims(masks[0], masks[i]);
    std::vector<Interval> all;
    for (const auto& m : masks) {
        auto spans = m.intervals();
        all.insert(all.end(), spans.begin(), spans.end());
    }
    std::sort(all.begin(), all.end(),
              [](const Interval& x, const Interval& y) { return x.begin < y.begin; });
    std::vector<Interval> merged;
    for (const auto& s : all) {
        if (!merged.empty() && s.begin <= merged.back().end)
            merged.back().end = std::max(merged.back().end, s.end);
        else
            merged.push_back(s);
    }
    return PixelMask::from_intervals(masks[0].width(), masks[0].height(), merged);
}

inline PixelMask union_masks(const std::vector<PixelMask>& masks) {
    return union_masks(std::span<const PixelMask>(masks));
}

/// Clip to the window [x0, x0+w) x [y0, y0+h), re-origined to the window. The
/// window may extend past the source; the excess is background.
inline PixelMask crop(const PixelMask& m, int x0, int y0, int w, int h) {
    if (w <= 0 || h <= 0) throw Error("crop window must be positive");
    std::vector<Interval> out;
    const std::uint32_t src_h = m.height();
    for (const auto& s : m.intervals()) {
        for (std::uint32_t col = s.begin / src_h; col <= (s.end - 1) / src_h; ++col) {
            const int x = static_cast<int>(col);
            if (x < x0 || x >= x0 + w) continue;
            std::uint32_t lo = std::max(s.begin, col * src_h);
            std::uint32_t hi = std::min(s.end, (col + 1) * src_h);
            int ya = static_cast<int>(lo - col * src_h);
            int yb = static_cast<int>(hi - col * src_h);  // one past last
            ya = std::max(ya, y0);
            yb = std::min(yb, y0 + h);
            if (ya >= yb) continue;
            std::uint32_t base = static_cast<std::uint32_t>(x - x0) * h;
            out.push_back({base + static_cast<std::uint32_t>(ya - y0),
                           base + static_cast<std::uint32_t>(yb - y0)});
        }
    }
    return PixelMask::from_intervals(w, h, out);
}

enum class Connectivity { four = 4, eight = 8 };

/// Maximal connected foreground regions, ordered by their first foreground
/// pixel in row-major scan order.
inline std::vector<PixelMask> connected_components(const PixelMask& m, Connectivity conn) {
    const int w = m.width();
    const int h = m.height();
    const auto bits = m.to_bits();
    std::vector<std::uint8_t> seen(bits.size(), 0);
    std::vector<PixelMask> components;
    std::vector<std::uint32_t> stack;
    std::vector<std::uint32_t> member_cols;  // column-major indices of one component

    const bool diag = conn == Connectivity::eight;
    for (std::size_t start = 0; start < bits.size(); ++start) {
        if (!bits[start] || seen[start]) continue;
        member_cols.clear();
        stack.clear();
        stack.push_back(static_cast<std::uint32_t>(start));
        seen[start] = 1;
        while (!stack.empty()) {
            const std::uint32_t idx = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(idx % w);
            const int y = static_cast<int>(idx / w);
            member_cols.push_back(static_cast<std::uint32_t>(x) * h + y);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (!diag && dx != 0 && dy != 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (!bits[nidx] || seen[nidx]) continue;
                    seen[nidx] = 1;
                    stack.push_back(static_cast<std::uint32_t>(nidx));
                }
            }
        }
        std::sort(member_cols.begin(), member_cols.end());
        std::vector<Interval> spans;
        for (auto idx : member_cols) {
            if (!spans.empty() && spans.back().end == idx)
                spans.back().end = idx + 1;
            else
                spans.push_back({idx, idx + 1});
        }
        components.push_back(PixelMask::from_intervals(w, h, spans));
    }
    return components;
}

}  // namespace geoseg
