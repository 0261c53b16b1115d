#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoseg/coco.hpp"
#include "geoseg/error.hpp"
#include "geoseg/evaluation.hpp"
#include "geoseg/preprocess.hpp"
#include "geoseg/quality_filter.hpp"

namespace geoseg {

/// Every pipeline tunable, addressable by dotted key. Precedence is
/// defaults < config file < command-line flags; unknown keys are rejected.
struct PipelineConfig {
    preprocess::MergeConfig merge;
    preprocess::TileSpec tile;
    std::vector<double> height_edges{15.0, 40.0};

    struct Convert {
        int window = 51;
        double offset = 0.0;
        int connectivity = 8;
        std::int64_t min_area = 1;
    } convert;

    quality::FilterConfig filter;
    eval::EvalConfig eval;

    struct Stats {
        double bin_width = 5.0;
    } stats;

    coco::HeightClassScheme scheme() const { return coco::HeightClassScheme(height_edges); }

    Connectivity connectivity() const {
        if (convert.connectivity == 4) return Connectivity::four;
        if (convert.connectivity == 8) return Connectivity::eight;
        throw Error("convert.connectivity must be 4 or 8");
    }

    /// Merge a nested JSON config into this one. Key paths follow the
    /// structure, e.g. {"merge": {"overlap_threshold": 0.6}}.
    void apply(const nlohmann::json& doc) {
        if (!doc.is_object()) throw Error("config must be a JSON object");
        for (const auto& [section, body] : doc.items()) {
            if (!body.is_object() && section != "height")
                throw Error("unknown config key '" + section + "'");
            if (section == "merge") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "overlap_threshold") merge.overlap_threshold = value.get<double>();
                    else throw Error("unknown config key 'merge." + key + "'");
                }
            } else if (section == "tile") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "size") tile.tile_size = value.get<int>();
                    else if (key == "min_clipped_area_ratio") tile.min_clipped_area_ratio = value.get<double>();
                    else if (key == "pad_value") tile.pad_value = value.get<int>();
                    else throw Error("unknown config key 'tile." + key + "'");
                }
            } else if (section == "height") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "edges") height_edges = value.get<std::vector<double>>();
                    else throw Error("unknown config key 'height." + key + "'");
                }
            } else if (section == "convert") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "window") convert.window = value.get<int>();
                    else if (key == "offset") convert.offset = value.get<double>();
                    else if (key == "connectivity") convert.connectivity = value.get<int>();
                    else if (key == "min_area") convert.min_area = value.get<std::int64_t>();
                    else throw Error("unknown config key 'convert." + key + "'");
                }
            } else if (section == "filter") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "iou_threshold") filter.iou_threshold = value.get<double>();
                    else if (key == "discard_ratio") filter.discard_ratio = value.get<double>();
                    else if (key == "score_threshold") filter.score_threshold = value.get<double>();
                    else throw Error("unknown config key 'filter." + key + "'");
                }
            } else if (section == "eval") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "iou_threshold") eval.iou_threshold = value.get<double>();
                    else if (key == "score_threshold") eval.score_threshold = value.get<double>();
                    else if (key == "mode") set_mode(value.get<std::string>());
                    else if (key == "group_matching") eval.enable_group_matching = value.get<bool>();
                    else throw Error("unknown config key 'eval." + key + "'");
                }
            } else if (section == "stats") {
                for (const auto& [key, value] : body.items()) {
                    if (key == "bin_width") stats.bin_width = value.get<double>();
                    else throw Error("unknown config key 'stats." + key + "'");
                }
            } else {
                throw Error("unknown config key '" + section + "'");
            }
        }
    }

    void set_mode(const std::string& mode) {
        if (mode == "bbox") eval.geometry_mode = eval::GeometryMode::bbox;
        else if (mode == "mask") eval.geometry_mode = eval::GeometryMode::mask;
        else throw Error("eval.mode must be 'bbox' or 'mask'");
    }

    /// Range checks, run after flags are folded in.
    void validate() const {
        const auto ratio01 = [](double v, const char* key, bool zero_ok) {
            const bool ok = zero_ok ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v <= 1.0);
            if (!ok) throw Error(std::string(key) + " must be in " + (zero_ok ? "[0, 1]" : "(0, 1]"));
        };
        ratio01(merge.overlap_threshold, "merge.overlap_threshold", false);
        if (tile.tile_size <= 0) throw Error("tile.size must be positive");
        ratio01(tile.min_clipped_area_ratio, "tile.min_clipped_area_ratio", true);
        coco::HeightClassScheme check(height_edges);  // validates edges
        if (convert.window < 3 || convert.window % 2 == 0)
            throw Error("convert.window must be odd and >= 3");
        if (convert.connectivity != 4 && convert.connectivity != 8)
            throw Error("convert.connectivity must be 4 or 8");
        if (convert.min_area < 0) throw Error("convert.min_area must be non-negative");
        ratio01(filter.iou_threshold, "filter.iou_threshold", false);
        ratio01(filter.discard_ratio, "filter.discard_ratio", false);
        ratio01(filter.score_threshold, "filter.score_threshold", true);
        ratio01(eval.iou_threshold, "eval.iou_threshold", false);
        ratio01(eval.score_threshold, "eval.score_threshold", false);
        if (stats.bin_width <= 0.0) throw Error("stats.bin_width must be positive");
    }

    nlohmann::json to_json() const {
        return {
            {"merge", {{"overlap_threshold", merge.overlap_threshold}}},
            {"tile",
             {{"size", tile.tile_size},
              {"min_clipped_area_ratio", tile.min_clipped_area_ratio},
              {"pad_value", tile.pad_value}}},
            {"height", {{"edges", height_edges}}},
            {"convert",
             {{"window", convert.window},
              {"offset", convert.offset},
              {"connectivity", convert.connectivity},
              {"min_area", convert.min_area}}},
            {"filter",
             {{"iou_threshold", filter.iou_threshold},
              {"discard_ratio", filter.discard_ratio},
              {"score_threshold", filter.score_threshold}}},
            {"eval",
             {{"iou_threshold", eval.iou_threshold},
              {"score_threshold", eval.score_threshold},
              {"mode", eval::to_string(eval.geometry_mode)},
              {"group_matching", eval.enable_group_matching}}},
            {"stats", {{"bin_width", stats.bin_width}}},
        };
    }
};

}  // namespace geoseg
