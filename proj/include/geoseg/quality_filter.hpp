#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoseg/coco.hpp"
#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"

namespace geoseg::quality {

struct FilterConfig {
    double iou_threshold = 0.5;    // IOU at which a gt/prediction pair counts as agreeing
    double discard_ratio = 0.5;    // image dropped when either missing ratio exceeds this
    double score_threshold = 0.5;  // confidence cut applied to predictions before screening
};

struct ImageQualityStats {
    std::int64_t image_id = 0;
    std::int64_t n_annotations = 0;
    std::int64_t n_predictions = 0;
    std::int64_t n_unmatched_annotations = 0;
    std::int64_t n_unmatched_predictions = 0;
    double missing_annotation_ratio = 0.0;  // unmatched annotations / annotations
    double missing_prediction_ratio = 0.0;  // unmatched predictions / predictions
    bool discard = false;
};

/// Screen one image's annotations against a reference model's predictions.
/// Matching is class-agnostic and many-to-one: an item is matched as soon as
/// anything on the other side reaches the IOU threshold. Ratios are the
/// unmatched/total quotients, 0 when the total is 0.
inline ImageQualityStats assess_image(const coco::ImageRecord& image,
                                      const std::vector<coco::Instance>& gts,
                                      const std::vector<coco::Instance>& preds,
                                      const FilterConfig& cfg) {
    if (!(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0))
        throw Error("iou threshold must be in (0, 1]");

    std::vector<PixelMask> gt_masks;
    for (const auto& g : gts) gt_masks.push_back(coco::instance_to_mask(g, image));
    std::vector<PixelMask> pred_masks;
    for (const auto& p : preds) {
        if (p.score && *p.score < cfg.score_threshold) continue;
        pred_masks.push_back(coco::instance_to_mask(p, image));
    }

    std::vector<bool> gt_matched(gt_masks.size(), false);
    std::vector<bool> pred_matched(pred_masks.size(), false);
    for (std::size_t g = 0; g < gt_masks.size(); ++g) {
        if (gt_masks[g].empty()) continue;
        for (std::size_t p = 0; p < pred_masks.size(); ++p) {
            if (pred_masks[p].empty()) continue;
            if (iou(gt_masks[g], pred_masks[p]) >= cfg.iou_threshold) {
                gt_matched[g] = true;
                pred_matched[p] = true;
            }
        }
    }

    ImageQualityStats stats;
    stats.image_id = image.id;
    stats.n_annotations = static_cast<std::int64_t>(gt_masks.size());
    stats.n_predictions = static_cast<std::int64_t>(pred_masks.size());
    stats.n_unmatched_annotations =
        static_cast<std::int64_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
    stats.n_unmatched_predictions =
        static_cast<std::int64_t>(std::count(pred_matched.begin(), pred_matched.end(), false));
    stats.missing_annotation_ratio =
        stats.n_annotations == 0
            ? 0.0
            : static_cast<double>(stats.n_unmatched_annotations) / stats.n_annotations;
    stats.missing_prediction_ratio =
        stats.n_predictions == 0
            ? 0.0
            : static_cast<double>(stats.n_unmatched_predictions) / stats.n_predictions;
    stats.discard = stats.missing_annotation_ratio > cfg.discard_ratio ||
                    stats.missing_prediction_ratio > cfg.discard_ratio;
    return stats;
}

/// Drop images whose annotations disagree too much with the reference
/// predictions. Kept images carry their annotations through untouched; the
/// report covers every image in ascending id order.
inline std::pair<coco::DatasetDoc, std::vector<ImageQualityStats>> filter_dataset(
    const coco::DatasetDoc& d, const std::vector<coco::Instance>& preds, const FilterConfig& cfg) {
    std::map<std::int64_t, std::vector<coco::Instance>> preds_by_image;
    for (const auto& p : preds) {
        if (!d.find_image(p.image_id))
            throw Error("prediction references missing image " + std::to_string(p.image_id));
        preds_by_image[p.image_id].push_back(p);
    }
    std::map<std::int64_t, std::vector<coco::Instance>> gts_by_image;
    for (const auto& a : d.annotations) gts_by_image[a.image_id].push_back(a);

    std::vector<const coco::ImageRecord*> ordered;
    for (const auto& im : d.images) ordered.push_back(&im);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });

    coco::DatasetDoc kept;
    kept.categories = d.categories;
    kept.info = d.info;
    std::set<std::int64_t> kept_ids;
    std::vector<ImageQualityStats> report;
    for (const auto* im : ordered) {
        static const std::vector<coco::Instance> none;
        const auto git = gts_by_image.find(im->id);
        const auto pit = preds_by_image.find(im->id);
        const auto stats = assess_image(*im, git == gts_by_image.end() ? none : git->second,
                                        pit == preds_by_image.end() ? none : pit->second, cfg);
        report.push_back(stats);
        if (!stats.discard) kept_ids.insert(im->id);
    }
    for (const auto& im : d.images)
        if (kept_ids.contains(im.id)) kept.images.push_back(im);
    for (const auto& a : d.annotations)
        if (kept_ids.contains(a.image_id)) kept.annotations.push_back(a);
    return {std::move(kept), std::move(report)};
}

inline std::string stats_csv(const std::vector<ImageQualityStats>& report) {
    std::string out =
        "image_id,n_annotations,n_predictions,n_unmatched_annotations,"
        "n_unmatched_predictions,missing_annotation_ratio,missing_prediction_ratio,discard\n";
    char buf[256];
    for (const auto& s : report) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld,%lld,%lld,%.9g,%.9g,%s\n",
                      static_cast<long long>(s.image_id), static_cast<long long>(s.n_annotations),
                      static_cast<long long>(s.n_predictions),
                      static_cast<long long>(s.n_unmatched_annotations),
                      static_cast<long long>(s.n_unmatched_predictions), s.missing_annotation_ratio,
                      s.missing_prediction_ratio, s.discard ? "true" : "false");
        out += buf;
    }
    return out;
}

}  // namespace geoseg::quality
