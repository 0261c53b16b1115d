#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoseg/coco.hpp"
#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"

namespace geoseg::eval {

using json = nlohmann::json;

enum class GeometryMode { bbox, mask };

inline const char* to_string(GeometryMode m) { return m == GeometryMode::bbox ? "bbox" : "mask"; }

struct EvalConfig {
    double iou_threshold = 0.5;
    double score_threshold = 0.5;  // confusion matrix only; AP ranks all scored predictions
    GeometryMode geometry_mode = GeometryMode::mask;
    bool enable_group_matching = true;
};

inline void validate(const EvalConfig& cfg) {
    if (!(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0))
        throw Error("iou threshold must be in (0, 1]");
    if (!(cfg.score_threshold > 0.0 && cfg.score_threshold <= 1.0))
        throw Error("score threshold must be in (0, 1]");
}

enum class MatchKind { one_to_one, under_detection, over_detection };

inline const char* to_string(MatchKind k) {
    switch (k) {
        case MatchKind::one_to_one: return "one_to_one";
        case MatchKind::under_detection: return "under_detection";
        default: return "over_detection";
    }
}

struct MatchRecord {
    MatchKind kind = MatchKind::one_to_one;
    std::int64_t image_id = 0;
    std::vector<std::int64_t> gt_ids;
    std::vector<std::int64_t> pred_ids;
    double iou = 0.0;
    int gt_class = 0;
    int pred_class = 0;
};

/// An instance prepared for matching: geometry rasterized, score defaulted.
struct Detection {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    int category_id = 0;
    double score = 1.0;
    std::array<double, 4> bbox{};
    PixelMask mask;
};

// ---------------------------------------------------------------------------
// IOU in both geometry modes
// ---------------------------------------------------------------------------

inline double box_iou(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    const double ix = std::max(0.0, std::min(a[0] + a[2], b[0] + b[2]) - std::max(a[0], b[0]));
    const double iy = std::max(0.0, std::min(a[1] + a[3], b[1] + b[3]) - std::max(a[1], b[1]));
    const double inter = ix * iy;
    const double uni = a[2] * a[3] + b[2] * b[3] - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// IOU between the union of several boxes (a region, not one enclosing box)
/// and a target box, exact via coordinate compression.
inline double region_box_iou(const std::vector<std::array<double, 4>>& boxes,
                             const std::array<double, 4>& target) {
    std::vector<double> xs{target[0], target[0] + target[2]};
    std::vector<double> ys{target[1], target[1] + target[3]};
    for (const auto& b : boxes) {
        xs.push_back(b[0]);
        xs.push_back(b[0] + b[2]);
        ys.push_back(b[1]);
        ys.push_back(b[1] + b[3]);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    const auto contains = [](const std::array<double, 4>& b, double cx, double cy) {
        return cx > b[0] && cx < b[0] + b[2] && cy > b[1] && cy < b[1] + b[3];
    };
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = (xs[i] + xs[i + 1]) / 2.0;
            const double cy = (ys[j] + ys[j + 1]) / 2.0;
            const double cell = (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            bool in_region = false;
            for (const auto& b : boxes)
                if (contains(b, cx, cy)) {
                    in_region = true;
                    break;
                }
            const bool in_target = contains(target, cx, cy);
            if (in_region && in_target) inter += cell;
            if (in_region || in_target) uni += cell;
        }
    }
    return uni > 0.0 ? inter / uni : 0.0;
}

/// IOU under the configured geometry. Degenerate pairs (no area on either
/// side) score 0 rather than erroring so they simply never match.
inline double pair_iou(const Detection& a, const Detection& b, GeometryMode mode) {
    if (mode == GeometryMode::bbox) return box_iou(a.bbox, b.bbox);
    if (a.mask.empty() && b.mask.empty()) return 0.0;
    return iou(a.mask, b.mask);
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

struct ImageMatches {
    std::vector<MatchRecord> matches;
    std::vector<std::int64_t> unmatched_gt_ids;
    std::vector<std::int64_t> unmatched_pred_ids;
};

/// Greedy 1-to-1 matching, class-agnostic. Candidate pairs at or above the
/// IOU threshold are taken best-IOU first (ties: higher prediction score,
/// then ascending gt id, then ascending prediction id).
inline ImageMatches greedy_match(const std::vector<Detection>& gts,
                                 const std::vector<Detection>& preds, const EvalConfig& cfg) {
    struct Candidate {
        double iou;
        double score;
        std::int64_t gt_id;
        std::int64_t pred_id;
        std::size_t gi, pi;
    };
    std::vector<Candidate> candidates;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        for (std::size_t pi = 0; pi < preds.size(); ++pi) {
            const double v = pair_iou(gts[gi], preds[pi], cfg.geometry_mode);
            if (v >= cfg.iou_threshold)
                candidates.push_back({v, preds[pi].score, gts[gi].id, preds[pi].id, gi, pi});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.score != b.score) return a.score > b.score;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.pred_id < b.pred_id;
    });

    ImageMatches out;
    std::vector<bool> gt_used(gts.size(), false);
    std::vector<bool> pred_used(preds.size(), false);
    for (const auto& c : candidates) {
        if (gt_used[c.gi] || pred_used[c.pi]) continue;
        gt_used[c.gi] = true;
        pred_used[c.pi] = true;
        out.matches.push_back({MatchKind::one_to_one,
                               gts[c.gi].image_id,
                               {c.gt_id},
                               {c.pred_id},
                               c.iou,
                               gts[c.gi].category_id,
                               preds[c.pi].category_id});
    }
    for (std::size_t gi = 0; gi < gts.size(); ++gi)
        if (!gt_used[gi]) out.unmatched_gt_ids.push_back(gts[gi].id);
    for (std::size_t pi = 0; pi < preds.size(); ++pi)
        if (!pred_used[pi]) out.unmatched_pred_ids.push_back(preds[pi].id);
    std::sort(out.unmatched_gt_ids.begin(), out.unmatched_gt_ids.end());
    std::sort(out.unmatched_pred_ids.begin(), out.unmatched_pred_ids.end());
    return out;
}

namespace detail {

inline double union_iou(const std::vector<const Detection*>& members, const Detection& anchor,
                        GeometryMode mode) {
    if (mode == GeometryMode::bbox) {
        std::vector<std::array<double, 4>> boxes;
        boxes.reserve(members.size());
        for (const auto* m : members) boxes.push_back(m->bbox);
        return region_box_iou(boxes, anchor.bbox);
    }
    std::vector<PixelMask> masks;
    masks.reserve(members.size());
    for (const auto* m : members) masks.push_back(m->mask);
    const PixelMask combined = union_masks(masks);
    if (combined.empty() && anchor.mask.empty()) return 0.0;
    return iou(combined, anchor.mask);
}

}  // namespace detail

/// One prediction jointly covering several ground truths: collect unmatched
/// ground truths of the prediction's class that overlap it at all, and accept
/// the group when the combined object reaches the IOU threshold.
inline std::optional<MatchRecord> resolve_under_detection(
    const Detection& pred, const std::vector<const Detection*>& unmatched_gts,
    const EvalConfig& cfg) {
    std::vector<const Detection*> members;
    for (const auto* g : unmatched_gts)
        if (g->category_id == pred.category_id && pair_iou(*g, pred, cfg.geometry_mode) > 0.0)
            members.push_back(g);
    if (members.size() < 2) return std::nullopt;
    const double v = detail::union_iou(members, pred, cfg.geometry_mode);
    if (v < cfg.iou_threshold) return std::nullopt;
    MatchRecord rec;
    rec.kind = MatchKind::under_detection;
    rec.image_id = pred.image_id;
    for (const auto* g : members) rec.gt_ids.push_back(g->id);
    std::sort(rec.gt_ids.begin(), rec.gt_ids.end());
    rec.pred_ids = {pred.id};
    rec.iou = v;
    rec.gt_class = pred.category_id;
    rec.pred_class = pred.category_id;
    return rec;
}

/// Several predictions jointly covering one ground truth; symmetric to
/// under-detection.
inline std::optional<MatchRecord> resolve_over_detection(
    const Detection& gt, const std::vector<const Detection*>& unmatched_preds,
    const EvalConfig& cfg) {
    std::vector<const Detection*> members;
    for (const auto* p : unmatched_preds)
        if (p->category_id == gt.category_id && pair_iou(*p, gt, cfg.geometry_mode) > 0.0)
            members.push_back(p);
    if (members.size() < 2) return std::nullopt;
    const double v = detail::union_iou(members, gt, cfg.geometry_mode);
    if (v < cfg.iou_threshold) return std::nullopt;
    MatchRecord rec;
    rec.kind = MatchKind::over_detection;
    rec.image_id = gt.image_id;
    rec.gt_ids = {gt.id};
    for (const auto* p : members) rec.pred_ids.push_back(p->id);
    std::sort(rec.pred_ids.begin(), rec.pred_ids.end());
    rec.iou = v;
    rec.gt_class = gt.category_id;
    rec.pred_class = gt.category_id;
    return rec;
}

/// Full per-image matching: greedy 1-to-1 first, then (when enabled)
/// under-detection over the leftover predictions and over-detection over the
/// leftover ground truths, each in ascending id order.
inline ImageMatches match_image(const std::vector<Detection>& gts,
                                const std::vector<Detection>& preds, const EvalConfig& cfg) {
    ImageMatches result = greedy_match(gts, preds, cfg);
    if (!cfg.enable_group_matching) return result;

    const auto by_id = [](const std::vector<Detection>& items) {
        std::map<std::int64_t, const Detection*> m;
        for (const auto& d : items) m[d.id] = &d;
        return m;
    };
    const auto gt_index = by_id(gts);
    const auto pred_index = by_id(preds);

    const auto pool = [](const std::vector<std::int64_t>& ids,
                         const std::map<std::int64_t, const Detection*>& index) {
        std::vector<const Detection*> ptrs;
        for (const auto id : ids) ptrs.push_back(index.at(id));
        return ptrs;
    };

    std::vector<const Detection*> gt_pool = pool(result.unmatched_gt_ids, gt_index);
    std::vector<const Detection*> pred_pool = pool(result.unmatched_pred_ids, pred_index);

    std::vector<const Detection*> remaining_preds;
    for (const auto* p : pred_pool) {
        if (auto rec = resolve_under_detection(*p, gt_pool, cfg)) {
            std::erase_if(gt_pool, [&](const Detection* g) {
                return std::binary_search(rec->gt_ids.begin(), rec->gt_ids.end(), g->id);
            });
            result.matches.push_back(std::move(*rec));
        } else {
            remaining_preds.push_back(p);
        }
    }
    std::vector<const Detection*> remaining_gts;
    for (const auto* g : gt_pool) {
        if (auto rec = resolve_over_detection(*g, remaining_preds, cfg)) {
            std::erase_if(remaining_preds, [&](const Detection* p) {
                return std::binary_search(rec->pred_ids.begin(), rec->pred_ids.end(), p->id);
            });
            result.matches.push_back(std::move(*rec));
        } else {
            remaining_gts.push_back(g);
        }
    }

    result.unmatched_gt_ids.clear();
    for (const auto* g : remaining_gts) result.unmatched_gt_ids.push_back(g->id);
    result.unmatched_pred_ids.clear();
    for (const auto* p : remaining_preds) result.unmatched_pred_ids.push_back(p->id);
    return result;
}

// ---------------------------------------------------------------------------
// Corpus preparation
// ---------------------------------------------------------------------------

struct ImageSet {
    coco::ImageRecord image;
    std::vector<Detection> gts;
    std::vector<Detection> preds;
};

struct PreparedCorpus {
    std::vector<coco::Category> classes;             // ascending id
    std::vector<ImageSet> images;                    // ascending image id
    std::map<int, std::int64_t> gt_count_by_class;
};

/// Rasterize everything once and group by image.
inline PreparedCorpus prepare(const coco::DatasetDoc& gt,
                              const std::vector<coco::Instance>& preds) {
    PreparedCorpus corpus;
    corpus.classes = gt.categories;
    std::sort(corpus.classes.begin(), corpus.classes.end(),
              [](const coco::Category& a, const coco::Category& b) { return a.id < b.id; });
    std::set<int> class_ids;
    for (const auto& c : corpus.classes) class_ids.insert(c.id);

    std::vector<const coco::ImageRecord*> ordered;
    for (const auto& im : gt.images) ordered.push_back(&im);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });

    const auto to_detection = [&](const coco::Instance& inst, const coco::ImageRecord& im) {
        if (!class_ids.contains(inst.category_id))
            throw Error("instance " + std::to_string(inst.id) + " references unknown category " +
                        std::to_string(inst.category_id));
        Detection det;
        det.id = inst.id;
        det.image_id = inst.image_id;
        det.category_id = inst.category_id;
        det.score = inst.score.value_or(1.0);
        det.bbox = inst.bbox;
        det.mask = coco::instance_to_mask(inst, im);
        return det;
    };

    for (const auto* im : ordered) {
        ImageSet set;
        set.image = *im;
        for (const auto& a : gt.annotations)
            if (a.image_id == im->id) set.gts.push_back(to_detection(a, *im));
        for (const auto& p : preds)
            if (p.image_id == im->id) set.preds.push_back(to_detection(p, *im));
        const auto by_id = [](const Detection& a, const Detection& b) { return a.id < b.id; };
        std::sort(set.gts.begin(), set.gts.end(), by_id);
        std::sort(set.preds.begin(), set.preds.end(), by_id);
        for (const auto& g : set.gts) ++corpus.gt_count_by_class[g.category_id];
        corpus.images.push_back(std::move(set));
    }
    for (const auto& p : preds)
        if (!gt.find_image(p.image_id))
            throw Error("prediction references missing image " + std::to_string(p.image_id));
    return corpus;
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

/// Class-by-class match counts with an extra Background row (spurious
/// predictions) and column (missed ground truths). Index layout is row-major
/// [gt][pred] with Background last; Background x Background stays 0.
struct ConfusionMatrix {
    std::vector<coco::Category> classes;
    std::vector<std::int64_t> counts;

    explicit ConfusionMatrix(std::vector<coco::Category> cls = {})
        : classes(std::move(cls)), counts((classes.size() + 1) * (classes.size() + 1), 0) {}

    std::size_t size() const { return classes.size() + 1; }
    std::size_t background() const { return classes.size(); }

    std::size_t index_of(int category_id) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i].id == category_id) return i;
        throw Error("unknown category " + std::to_string(category_id));
    }

    std::int64_t& at(std::size_t gt_row, std::size_t pred_col) {
        return counts[gt_row * size() + pred_col];
    }
    std::int64_t at(std::size_t gt_row, std::size_t pred_col) const {
        return counts[gt_row * size() + pred_col];
    }

    /// Rows divided by their sums; all-zero rows stay zero.
    std::vector<double> row_normalized() const {
        std::vector<double> out(counts.size(), 0.0);
        for (std::size_t r = 0; r < size(); ++r) {
            std::int64_t sum = 0;
            for (std::size_t c = 0; c < size(); ++c) sum += at(r, c);
            if (sum == 0) continue;
            for (std::size_t c = 0; c < size(); ++c)
                out[r * size() + c] = static_cast<double>(at(r, c)) / static_cast<double>(sum);
        }
        return out;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MatchingSummary {
    ConfusionMatrix matrix;
    std::vector<MatchRecord> records;  // across all images, image id order
};

/// Score-threshold the predictions, match per image, and accumulate counts.
/// 1-to-1 matches land at [gt_class][pred_class]; an under-detection credits
/// each consumed ground truth once on the diagonal; an over-detection credits
/// its single ground truth once; unmatched items go to the Background column
/// (missed gt) or row (spurious prediction).
inline MatchingSummary confusion_matrix(const PreparedCorpus& corpus, const EvalConfig& cfg) {
    MatchingSummary summary{ConfusionMatrix(corpus.classes), {}};
    ConfusionMatrix& m = summary.matrix;
    for (const auto& set : corpus.images) {
        std::vector<Detection> retained;
        for (const auto& p : set.preds)
            if (p.score >= cfg.score_threshold) retained.push_back(p);
        const ImageMatches matches = match_image(set.gts, retained, cfg);

        for (const auto& rec : matches.matches) {
            switch (rec.kind) {
                case MatchKind::one_to_one:
                    ++m.at(m.index_of(rec.gt_class), m.index_of(rec.pred_class));
                    break;
                case MatchKind::under_detection:
                    m.at(m.index_of(rec.gt_class), m.index_of(rec.gt_class)) +=
                        static_cast<std::int64_t>(rec.gt_ids.size());
                    break;
                case MatchKind::over_detection:
                    ++m.at(m.index_of(rec.gt_class), m.index_of(rec.gt_class));
                    break;
            }
            summary.records.push_back(rec);
        }
        std::map<std::int64_t, int> gt_class, pred_class;
        for (const auto& g : set.gts) gt_class[g.id] = g.category_id;
        for (const auto& p : retained) pred_class[p.id] = p.category_id;
        for (const auto id : matches.unmatched_gt_ids)
            ++m.at(m.index_of(gt_class.at(id)), m.background());
        for (const auto id : matches.unmatched_pred_ids)
            ++m.at(m.background(), m.index_of(pred_class.at(id)));
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Average precision
// ---------------------------------------------------------------------------

/// Corpus-wide AP for one class at the configured IOU: predictions ranked by
/// descending score (ties: ascending id), greedily claiming the best-IOU free
/// ground truth of the same class on their image; 101-point interpolated area
/// under the precision/recall curve. nullopt when the class has no ground
/// truth (it is then excluded from the mean).
inline std::optional<double> average_precision(const PreparedCorpus& corpus, int category_id,
                                               GeometryMode mode, double iou_threshold) {
    const auto it = corpus.gt_count_by_class.find(category_id);
    const std::int64_t n_gt = it == corpus.gt_count_by_class.end() ? 0 : it->second;
    if (n_gt == 0) return std::nullopt;

    struct Ranked {
        double score;
        std::int64_t id;
        std::size_t image_index;
        const Detection* det;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < corpus.images.size(); ++i)
        for (const auto& p : corpus.images[i].preds)
            if (p.category_id == category_id) ranked.push_back({p.score, p.id, i, &p});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });

    std::map<std::size_t, std::set<std::int64_t>> claimed;  // image index -> claimed gt ids
    std::vector<bool> is_tp(ranked.size(), false);
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        const auto& r = ranked[k];
        const auto& gts = corpus.images[r.image_index].gts;
        auto& taken = claimed[r.image_index];
        const Detection* best = nullptr;
        double best_iou = 0.0;
        for (const auto& g : gts) {
            if (g.category_id != category_id || taken.contains(g.id)) continue;
            const double v = pair_iou(g, *r.det, mode);
            if (v < iou_threshold) continue;
            if (!best || v > best_iou || (v == best_iou && g.id < best->id)) {
                best = &g;
                best_iou = v;
            }
        }
        if (best) {
            taken.insert(best->id);
            is_tp[k] = true;
        }
    }

    // Precision envelope sampled at 101 recall points.
    std::vector<double> precision(ranked.size()), recall(ranked.size());
    std::int64_t tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        if (is_tp[k]) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
    }
    for (std::size_t k = ranked.size(); k-- > 1;)
        precision[k - 1] = std::max(precision[k - 1], precision[k]);

    double ap = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = static_cast<double>(i) / 100.0;
        // First rank reaching recall >= r; envelope makes its precision maximal.
        const auto pos = std::lower_bound(recall.begin(), recall.end(), r);
        if (pos != recall.end()) ap += precision[static_cast<std::size_t>(pos - recall.begin())];
    }
    return ap / 101.0;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EvalReport {
    std::vector<coco::Category> classes;
    std::map<int, double> ap_bbox;  // classes with >= 1 ground truth
    std::map<int, double> ap_mask;
    double map_bbox = 0.0;
    double map_mask = 0.0;
    ConfusionMatrix confusion;           // per config
    ConfusionMatrix confusion_no_group;  // same corpus, group matching off
    std::map<int, double> per_class_accuracy;
    std::map<int, double> per_class_accuracy_no_group;
    std::vector<MatchRecord> match_records;  // from the configured matching
    EvalConfig config;
};

namespace detail {

inline std::map<int, double> diagonal_accuracy(const ConfusionMatrix& m) {
    std::map<int, double> acc;
    const auto normalized = m.row_normalized();
    for (std::size_t i = 0; i < m.classes.size(); ++i) {
        std::int64_t row_sum = 0;
        for (std::size_t c = 0; c < m.size(); ++c) row_sum += m.at(i, c);
        if (row_sum > 0) acc[m.classes[i].id] = normalized[i * m.size() + i];
    }
    return acc;
}

}  // namespace detail

/// Run the full evaluation: both-geometry AP/mAP, the confusion matrix with
/// and without group matching, per-class accuracy, and the match audit trail.
inline EvalReport evaluate(const coco::DatasetDoc& gt, const std::vector<coco::Instance>& preds,
                           const EvalConfig& cfg) {
    validate(cfg);
    const PreparedCorpus corpus = prepare(gt, preds);
    EvalReport report;
    report.classes = corpus.classes;
    report.config = cfg;

    for (const auto& c : corpus.classes) {
        if (const auto ap = average_precision(corpus, c.id, GeometryMode::bbox, cfg.iou_threshold))
            report.ap_bbox[c.id] = *ap;
        if (const auto ap = average_precision(corpus, c.id, GeometryMode::mask, cfg.iou_threshold))
            report.ap_mask[c.id] = *ap;
    }
    const auto mean = [](const std::map<int, double>& aps) {
        if (aps.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& [id, v] : aps) sum += v;
        return sum / static_cast<double>(aps.size());
    };
    report.map_bbox = mean(report.ap_bbox);
    report.map_mask = mean(report.ap_mask);

    EvalConfig grouped = cfg;
    auto summary = confusion_matrix(corpus, grouped);
    report.confusion = summary.matrix;
    report.match_records = std::move(summary.records);

    EvalConfig ungrouped = cfg;
    ungrouped.enable_group_matching = false;
    report.confusion_no_group = confusion_matrix(corpus, ungrouped).matrix;

    report.per_class_accuracy = detail::diagonal_accuracy(report.confusion);
    report.per_class_accuracy_no_group = detail::diagonal_accuracy(report.confusion_no_group);
    return report;
}

namespace detail {

inline json matrix_to_json(const ConfusionMatrix& m) {
    json j = json::object();
    json labels = json::array();
    for (const auto& c : m.classes) labels.push_back(c.name);
    labels.push_back("Background");
    j["labels"] = std::move(labels);
    json counts = json::array();
    json normalized = json::array();
    const auto norm = m.row_normalized();
    for (std::size_t r = 0; r < m.size(); ++r) {
        json crow = json::array();
        json nrow = json::array();
        for (std::size_t c = 0; c < m.size(); ++c) {
            crow.push_back(m.at(r, c));
            nrow.push_back(norm[r * m.size() + c]);
        }
        counts.push_back(std::move(crow));
        normalized.push_back(std::move(nrow));
    }
    j["counts"] = std::move(counts);
    j["row_normalized"] = std::move(normalized);
    return j;
}

inline json accuracy_to_json(const std::map<int, double>& acc) {
    json j = json::object();
    for (const auto& [id, v] : acc) j[std::to_string(id)] = v;
    return j;
}

}  // namespace detail

inline json report_to_json(const EvalReport& r) {
    json j = json::object();
    json classes = json::array();
    for (const auto& c : r.classes) classes.push_back({{"id", c.id}, {"name", c.name}});
    j["classes"] = std::move(classes);
    j["config"] = {{"iou_threshold", r.config.iou_threshold},
                   {"score_threshold", r.config.score_threshold},
                   {"geometry_mode", to_string(r.config.geometry_mode)},
                   {"group_matching", r.config.enable_group_matching}};
    j["map"] = {{"bbox", r.map_bbox}, {"mask", r.map_mask}};
    j["per_class_ap"] = {{"bbox", detail::accuracy_to_json(r.ap_bbox)},
                         {"mask", detail::accuracy_to_json(r.ap_mask)}};
    j["confusion_matrix"] = detail::matrix_to_json(r.confusion);
    j["confusion_matrix_no_group"] = detail::matrix_to_json(r.confusion_no_group);
    j["per_class_accuracy"] = detail::accuracy_to_json(r.per_class_accuracy);
    j["per_class_accuracy_no_group"] = detail::accuracy_to_json(r.per_class_accuracy_no_group);
    json records = json::array();
    for (const auto& rec : r.match_records) {
        records.push_back({{"kind", to_string(rec.kind)},
                           {"image_id", rec.image_id},
                           {"gt_ids", rec.gt_ids},
                           {"pred_ids", rec.pred_ids},
                           {"iou", rec.iou},
                           {"gt_class", rec.gt_class},
                           {"pred_class", rec.pred_class}});
    }
    j["match_records"] = std::move(records);
    return j;
}

/// Human-readable table in the row-normalized percentage layout: ground truth
/// rows, prediction columns, Background last, integer-rounded percentages.
inline std::string report_table(const EvalReport& r) {
    const ConfusionMatrix& m = r.confusion;
    std::vector<std::string> labels;
    for (const auto& c : m.classes) labels.push_back(c.name);
    labels.push_back("Background");

    std::size_t label_width = std::string("Ground Truth").size();
    for (const auto& l : labels) label_width = std::max(label_width, l.size());

    const auto norm = m.row_normalized();
    std::string out = "Confusion matrix (rows: ground truth, columns: prediction)\n\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(label_width), "Ground Truth");
    out += buf;
    for (const auto& l : labels) {
        std::snprintf(buf, sizeof(buf), "  %*s", static_cast<int>(std::max<std::size_t>(l.size(), 4)),
                      l.c_str());
        out += buf;
    }
    out += "\n";
    for (std::size_t row = 0; row < m.size(); ++row) {
        std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(label_width), labels[row].c_str());
        out += buf;
        for (std::size_t col = 0; col < m.size(); ++col) {
            const long pct = std::lround(norm[row * m.size() + col] * 100.0);
            std::snprintf(buf, sizeof(buf), "  %*ld%%",
                          static_cast<int>(std::max<std::size_t>(labels[col].size(), 4)) - 1, pct);
            out += buf;
        }
        out += "\n";
    }

    std::snprintf(buf, sizeof(buf), "\nmAP(IOU=%g) bbox: %.4f\n", r.config.iou_threshold, r.map_bbox);
    out += buf;
    std::snprintf(buf, sizeof(buf), "mAP(IOU=%g) mask: %.4f\n", r.config.iou_threshold, r.map_mask);
    out += buf;
    out += "\nPer-class accuracy (group matching " +
           std::string(r.config.enable_group_matching ? "on" : "off") + "):\n";
    const auto& acc =
        r.config.enable_group_matching ? r.per_class_accuracy : r.per_class_accuracy_no_group;
    for (const auto& c : m.classes) {
        const auto it = acc.find(c.id);
        if (it == acc.end()) continue;
        std::snprintf(buf, sizeof(buf), "  %-12s %3ld%%\n", c.name.c_str(),
                      std::lround(it->second * 100.0));
        out += buf;
    }
    return out;
}

/// Audit CSV: one row per match record, id lists joined with ';'.
inline std::string match_records_csv(const std::vector<MatchRecord>& records) {
    std::string out = "kind,image_id,gt_ids,pred_ids,iou\n";
    const auto join = [](const std::vector<std::int64_t>& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) s += ';';
            s += std::to_string(ids[i]);
        }
        return s;
    };
    char buf[64];
    for (const auto& rec : records) {
        out += to_string(rec.kind);
        out += ',';
        out += std::to_string(rec.image_id);
        out += ',';
        out += join(rec.gt_ids);
        out += ',';
        out += join(rec.pred_ids);
        std::snprintf(buf, sizeof(buf), ",%.9g\n", rec.iou);
        out += buf;
    }
    return out;
}

}  // namespace geoseg::eval
