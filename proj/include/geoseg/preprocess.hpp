#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "geoseg/coco.hpp"
#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"
#include "geoseg/probability_map.hpp"

namespace geoseg::preprocess {

struct MergeConfig {
    double overlap_threshold = 0.5;  // in (0, 1]
};

struct TileSpec {
    int tile_size = 512;
    double min_clipped_area_ratio = 0.25;
    int pad_value = 0;  // background fill for partial edge tiles (image pixels)
};

/// Height in meters to 1-based class id under left-open/right-closed bins.
inline int assign_height_class(double height_m, const coco::HeightClassScheme& scheme) {
    return scheme.class_for(height_m);
}

namespace detail {

struct Dsu {
    std::vector<std::size_t> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

inline bool boxes_touch(const Box& a, const Box& b) {
    return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

}  // namespace detail

struct MergeGroup {
    std::int64_t image_id = 0;
    std::int64_t merged_id = 0;
    double height_m = 0.0;
    std::vector<std::int64_t> member_ids;  // original annotation ids absorbed
};

/// Collapse groups of mutually overlapping annotations into one instance per
/// group. Two annotations connect when the larger of their intersection-over-
/// own-area ratios exceeds the threshold; groups are the transitive closure.
/// The tallest member wins: its id and attributes survive, the geometry is the
/// union, and the class is recomputed from the merged height. Runs to a fixed
/// point, so re-applying the operation changes nothing.
inline std::vector<coco::Instance> merge_overlapping_annotations(
    const std::vector<coco::Instance>& instances, const coco::ImageRecord& image,
    const MergeConfig& cfg, const coco::HeightClassScheme& scheme,
    std::vector<MergeGroup>* log = nullptr) {
    if (!(cfg.overlap_threshold > 0.0 && cfg.overlap_threshold <= 1.0))
        throw Error("overlap threshold must be in (0, 1]");
    for (const auto& inst : instances) {
        if (inst.image_id != image.id)
            throw Error("annotation " + std::to_string(inst.id) + " does not belong to image " +
                        std::to_string(image.id));
        if (!inst.height_m)
            throw Error("annotation " + std::to_string(inst.id) + " has no height_m");
    }

    std::vector<coco::Instance> work = instances;
    std::vector<PixelMask> masks;
    std::vector<std::vector<std::int64_t>> origins;  // original ids behind each working instance
    masks.reserve(work.size());
    for (const auto& inst : work) {
        masks.push_back(coco::instance_to_mask(inst, image));
        origins.push_back({inst.id});
    }

    for (;;) {
        const std::size_t n = work.size();
        std::vector<Box> boxes(n);
        for (std::size_t i = 0; i < n; ++i) boxes[i] = masks[i].bbox();

        detail::Dsu dsu(n);
        bool any_edge = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (masks[i].empty()) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (masks[j].empty()) continue;
                if (!detail::boxes_touch(boxes[i], boxes[j])) continue;
                if (max_overlap_ratio(masks[i], masks[j]) > cfg.overlap_threshold) {
                    dsu.unite(i, j);
                    any_edge = true;
                }
            }
        }
        if (!any_edge) break;

        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < n; ++i) groups[dsu.find(i)].push_back(i);

        std::vector<coco::Instance> next;
        std::vector<PixelMask> next_masks;
        std::vector<std::vector<std::int64_t>> next_origins;
        for (const auto& [root, members] : groups) {
            if (members.size() == 1) {
                next.push_back(work[members[0]]);
                next_masks.push_back(masks[members[0]]);
                next_origins.push_back(origins[members[0]]);
                continue;
            }
            std::size_t tallest = members[0];
            std::vector<PixelMask> member_masks;
            std::vector<std::int64_t> member_ids;
            for (const auto idx : members) {
                member_masks.push_back(masks[idx]);
                member_ids.insert(member_ids.end(), origins[idx].begin(), origins[idx].end());
                const bool taller = *work[idx].height_m > *work[tallest].height_m;
                const bool tie_lower_id = *work[idx].height_m == *work[tallest].height_m &&
                                          work[idx].id < work[tallest].id;
                if (taller || tie_lower_id) tallest = idx;
            }
            std::sort(member_ids.begin(), member_ids.end());
            coco::Instance merged = work[tallest];
            const PixelMask geom = union_masks(member_masks);
            merged.polygons.clear();
            merged.rle = geom;
            merged.category_id = assign_height_class(*merged.height_m, scheme);
            const Box tight = geom.bbox();
            merged.bbox = {static_cast<double>(tight.x), static_cast<double>(tight.y),
                           static_cast<double>(tight.w), static_cast<double>(tight.h)};
            merged.area = static_cast<double>(geom.area());
            next.push_back(std::move(merged));
            next_masks.push_back(geom);
            next_origins.push_back(std::move(member_ids));
        }
        work = std::move(next);
        masks = std::move(next_masks);
        origins = std::move(next_origins);
    }

    std::vector<std::size_t> order(work.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return work[a].id < work[b].id; });
    std::vector<coco::Instance> result;
    result.reserve(work.size());
    for (const auto idx : order) {
        if (log && origins[idx].size() >= 2)
            log->push_back({image.id, work[idx].id, *work[idx].height_m, origins[idx]});
        result.push_back(std::move(work[idx]));
    }
    return result;
}

/// Apply overlap merging image by image across a corpus.
inline coco::DatasetDoc merge_dataset(const coco::DatasetDoc& d, const MergeConfig& cfg,
                                      const coco::HeightClassScheme& scheme,
                                      std::vector<MergeGroup>* log = nullptr) {
    coco::DatasetDoc out;
    out.images = d.images;
    out.categories = d.categories;
    out.info = d.info;
    std::vector<const coco::ImageRecord*> ordered;
    for (const auto& im : d.images) ordered.push_back(&im);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });
    for (const auto* im : ordered) {
        std::vector<coco::Instance> anns;
        for (const auto& a : d.annotations)
            if (a.image_id == im->id) anns.push_back(a);
        auto merged = merge_overlapping_annotations(anns, *im, cfg, scheme, log);
        out.annotations.insert(out.annotations.end(), merged.begin(), merged.end());
    }
    return out;
}

/// Cut every image on a non-overlapping tile_size grid anchored at the origin.
/// Edge tiles are recorded at full tile size. Instance fragments below the
/// area-keep rule are dropped; kept fragments get fresh ids and re-origined
/// RLE geometry.
inline coco::DatasetDoc tile_dataset(const coco::DatasetDoc& d, const TileSpec& spec) {
    if (spec.tile_size <= 0) throw Error("tile size must be positive");
    if (!(spec.min_clipped_area_ratio >= 0.0 && spec.min_clipped_area_ratio <= 1.0))
        throw Error("min clipped area ratio must be in [0, 1]");

    coco::DatasetDoc out;
    out.categories = d.categories;
    out.info = d.info;

    std::vector<const coco::ImageRecord*> ordered;
    for (const auto& im : d.images) ordered.push_back(&im);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });

    const int ts = spec.tile_size;
    std::int64_t next_image_id = 1;
    std::int64_t next_ann_id = 1;
    for (const auto* im : ordered) {
        std::vector<const coco::Instance*> anns;
        for (const auto& a : d.annotations)
            if (a.image_id == im->id) anns.push_back(&a);
        std::sort(anns.begin(), anns.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

        std::vector<PixelMask> masks;
        std::vector<Box> boxes;
        masks.reserve(anns.size());
        for (const auto* a : anns) {
            masks.push_back(coco::instance_to_mask(*a, *im));
            boxes.push_back(masks.back().bbox());
        }

        const int rows = (im->height + ts - 1) / ts;
        const int cols = (im->width + ts - 1) / ts;
        const std::string stem = [&] {
            const auto dot = im->file_name.rfind('.');
            return dot == std::string::npos ? im->file_name : im->file_name.substr(0, dot);
        }();
        const std::string ext = [&] {
            const auto dot = im->file_name.rfind('.');
            return dot == std::string::npos ? std::string(".png") : im->file_name.substr(dot);
        }();

        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                coco::ImageRecord tile;
                tile.id = next_image_id++;
                tile.file_name = stem + "_r" + std::to_string(r) + "_c" + std::to_string(c) + ext;
                tile.width = ts;
                tile.height = ts;
                tile.source_scene = im->source_scene.value_or(im->file_name);
                tile.tile_origin = {r, c};
                out.images.push_back(tile);

                const int x0 = c * ts;
                const int y0 = r * ts;
                for (std::size_t k = 0; k < anns.size(); ++k) {
                    const Box& b = boxes[k];
                    if (b.w == 0 || b.h == 0) continue;
                    if (b.x >= x0 + ts || b.x + b.w <= x0 || b.y >= y0 + ts || b.y + b.h <= y0)
                        continue;
                    const PixelMask frag = crop(masks[k], x0, y0, ts, ts);
                    const auto frag_area = frag.area();
                    if (frag_area == 0) continue;
                    const auto orig_area = masks[k].area();
                    const bool keep =
                        static_cast<double>(frag_area) >=
                            spec.min_clipped_area_ratio * static_cast<double>(orig_area) ||
                        frag_area >= orig_area;
                    if (!keep) continue;
                    coco::Instance fragment = *anns[k];
                    fragment.id = next_ann_id++;
                    fragment.image_id = tile.id;
                    fragment.polygons.clear();
                    fragment.rle = frag;
                    const Box tight = frag.bbox();
                    fragment.bbox = {static_cast<double>(tight.x), static_cast<double>(tight.y),
                                     static_cast<double>(tight.w), static_cast<double>(tight.h)};
                    fragment.area = static_cast<double>(frag_area);
                    out.annotations.push_back(std::move(fragment));
                }
            }
        }
    }
    return out;
}

/// Instance geometries from a semantic probability map: adaptive threshold,
/// then connected components, dropping components below min_area.
inline std::vector<PixelMask> semantic_to_instances(const ProbabilityMap& map, int window,
                                                    double offset, Connectivity connectivity,
                                                    std::int64_t min_area) {
    if (min_area < 0) throw Error("min_area must be non-negative");
    const PixelMask binary = is_binary(map) ? to_mask(map) : adaptive_threshold(map, window, offset);
    auto components = connected_components(binary, connectivity);
    std::erase_if(components, [&](const PixelMask& m) { return m.area() < min_area; });
    return components;
}

/// Overload for inputs that already are binary masks; thresholding is skipped.
inline std::vector<PixelMask> semantic_to_instances(const PixelMask& binary,
                                                    Connectivity connectivity,
                                                    std::int64_t min_area) {
    if (min_area < 0) throw Error("min_area must be non-negative");
    auto components = connected_components(binary, connectivity);
    std::erase_if(components, [&](const PixelMask& m) { return m.area() < min_area; });
    return components;
}

}  // namespace geoseg::preprocess
