#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "geoseg/evaluation.hpp"
#include "support/oracles.hpp"

using geoseg::PixelMask;
using namespace geoseg::coco;
using namespace geoseg::eval;

namespace {

ImageRecord make_image(std::int64_t id, int w = 64, int h = 64) {
    ImageRecord im;
    im.id = id;
    im.file_name = "img_" + std::to_string(id) + ".png";
    im.width = w;
    im.height = h;
    return im;
}

PixelMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) bits[static_cast<std::size_t>(y) * w + x] = 1;
    return PixelMask::from_bits(w, h, bits);
}

Detection rect_detection(std::int64_t id, std::int64_t image_id, int category, int w, int h,
                         int x0, int y0, int rw, int rh, double score = 1.0) {
    Detection d;
    d.id = id;
    d.image_id = image_id;
    d.category_id = category;
    d.score = score;
    d.bbox = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(rw),
              static_cast<double>(rh)};
    d.mask = rect_mask(w, h, x0, y0, rw, rh);
    return d;
}

Instance rect_instance(std::int64_t id, const ImageRecord& im, int category, int x0, int y0,
                       int rw, int rh, std::optional<double> score = std::nullopt,
                       std::optional<double> height = std::nullopt) {
    Instance a;
    a.id = id;
    a.image_id = im.id;
    a.category_id = category;
    a.rle = rect_mask(im.width, im.height, x0, y0, rw, rh);
    a.bbox = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(rw),
              static_cast<double>(rh)};
    a.area = static_cast<double>(rw) * rh;
    a.score = score;
    a.height_m = height;
    return a;
}

std::vector<Category> three_classes() {
    return {{1, "0m-15m", {}}, {2, "15m-40m", {}}, {3, "40m+", {}}};
}

}  // namespace

TEST_CASE("greedy matching basics") {
    EvalConfig cfg;
    SECTION("one gt, one pred above the threshold") {
        const std::vector<Detection> gts = {rect_detection(1, 1, 1, 32, 32, 0, 0, 8, 8)};
        const std::vector<Detection> preds = {rect_detection(10, 1, 1, 32, 32, 0, 1, 8, 8, 0.9)};
        const auto m = greedy_match(gts, preds, cfg);
        REQUIRE(m.matches.size() == 1);
        CHECK(m.matches[0].gt_ids == std::vector<std::int64_t>{1});
        CHECK(m.matches[0].pred_ids == std::vector<std::int64_t>{10});
        CHECK(m.unmatched_gt_ids.empty());
        CHECK(m.unmatched_pred_ids.empty());
    }
    SECTION("the higher-IOU prediction wins") {
        const std::vector<Detection> gts = {rect_detection(1, 1, 1, 32, 32, 0, 0, 8, 8)};
        const std::vector<Detection> preds = {
            rect_detection(10, 1, 1, 32, 32, 0, 1, 8, 8, 0.9),   // IOU 7/9 higher
            rect_detection(11, 1, 1, 32, 32, 0, 2, 8, 8, 0.95),  // IOU 6/10 lower
        };
        const auto m = greedy_match(gts, preds, cfg);
        REQUIRE(m.matches.size() == 1);
        CHECK(m.matches[0].pred_ids == std::vector<std::int64_t>{10});
        CHECK(m.unmatched_pred_ids == std::vector<std::int64_t>{11});
    }
    SECTION("below-threshold pairs stay unmatched") {
        const std::vector<Detection> gts = {rect_detection(1, 1, 1, 32, 32, 0, 0, 8, 8)};
        // IOU = 24/104 = 0.45 > threshold? No: 8x8 vs shifted by 5: 3*8=24 inter, union 104.
        const std::vector<Detection> preds = {rect_detection(10, 1, 1, 32, 32, 5, 0, 8, 8, 0.9)};
        CHECK(pair_iou(gts[0], preds[0], GeometryMode::mask) < 0.5);
        const auto m = greedy_match(gts, preds, cfg);
        CHECK(m.matches.empty());
        CHECK(m.unmatched_gt_ids == std::vector<std::int64_t>{1});
        CHECK(m.unmatched_pred_ids == std::vector<std::int64_t>{10});
    }
    SECTION("matching is class-agnostic") {
        const std::vector<Detection> gts = {rect_detection(1, 1, 1, 32, 32, 0, 0, 8, 8)};
        const std::vector<Detection> preds = {rect_detection(10, 1, 2, 32, 32, 0, 0, 8, 8, 0.9)};
        const auto m = greedy_match(gts, preds, cfg);
        REQUIRE(m.matches.size() == 1);
        CHECK(m.matches[0].gt_class == 1);
        CHECK(m.matches[0].pred_class == 2);
    }
}

TEST_CASE("under-detection: one prediction spanning two ground truths") {
    EvalConfig cfg;
    // gts 10x10 at x=0 and x=14; prediction covers [0,24) x [0,10).
    const Detection g1 = rect_detection(1, 1, 2, 40, 16, 0, 0, 10, 10);
    const Detection g2 = rect_detection(2, 1, 2, 40, 16, 14, 0, 10, 10);
    const Detection pred = rect_detection(10, 1, 2, 40, 16, 0, 0, 24, 10, 0.9);
    CHECK(pair_iou(g1, pred, GeometryMode::mask) == Catch::Approx(100.0 / 240.0));
    CHECK(pair_iou(g1, pred, GeometryMode::mask) < 0.5);

    SECTION("accepted when the union clears the threshold") {
        const auto rec = resolve_under_detection(pred, {&g1, &g2}, cfg);
        REQUIRE(rec.has_value());
        CHECK(rec->kind == MatchKind::under_detection);
        CHECK(rec->gt_ids == std::vector<std::int64_t>{1, 2});
        CHECK(rec->pred_ids == std::vector<std::int64_t>{10});
        CHECK(rec->iou == Catch::Approx(200.0 / 240.0));
    }
    SECTION("a single overlapping gt is not a group") {
        CHECK_FALSE(resolve_under_detection(pred, {&g1}, cfg).has_value());
    }
    SECTION("rejected when the union IOU is below the threshold") {
        EvalConfig strict = cfg;
        strict.iou_threshold = 0.9;
        CHECK_FALSE(resolve_under_detection(pred, {&g1, &g2}, strict).has_value());
    }
    SECTION("only ground truths of the prediction's class are collected") {
        const Detection other_class = rect_detection(3, 1, 1, 40, 16, 14, 0, 10, 10);
        CHECK_FALSE(resolve_under_detection(pred, {&g1, &other_class}, cfg).has_value());
    }
    SECTION("bbox mode uses the region union, not one enclosing box") {
        const auto rec = resolve_under_detection(pred, {&g1, &g2}, [&] {
            EvalConfig c = cfg;
            c.geometry_mode = GeometryMode::bbox;
            return c;
        }());
        REQUIRE(rec.has_value());
        CHECK(rec->iou == Catch::Approx(200.0 / 240.0));
    }
}

TEST_CASE("over-detection: two predictions covering one ground truth") {
    EvalConfig cfg;
    const Detection gt = rect_detection(1, 1, 3, 40, 16, 0, 0, 24, 10);
    const Detection p1 = rect_detection(10, 1, 3, 40, 16, 0, 0, 10, 10, 0.9);
    const Detection p2 = rect_detection(11, 1, 3, 40, 16, 14, 0, 10, 10, 0.8);
    const auto rec = resolve_over_detection(gt, {&p1, &p2}, cfg);
    REQUIRE(rec.has_value());
    CHECK(rec->kind == MatchKind::over_detection);
    CHECK(rec->gt_ids == std::vector<std::int64_t>{1});
    CHECK(rec->pred_ids == std::vector<std::int64_t>{10, 11});
    CHECK(rec->iou == Catch::Approx(200.0 / 240.0));

    CHECK_FALSE(resolve_over_detection(gt, {&p1}, cfg).has_value());
    const Detection wrong_class = rect_detection(12, 1, 1, 40, 16, 14, 0, 10, 10, 0.8);
    CHECK_FALSE(resolve_over_detection(gt, {&p1, &wrong_class}, cfg).has_value());
}

TEST_CASE("confusion matrix on a hand-computed composite fixture") {
    DatasetDoc gt;
    gt.categories = three_classes();
    const ImageRecord im = make_image(1);
    gt.images = {im};
    gt.annotations = {
        rect_instance(1, im, 1, 0, 0, 8, 8),     // matched 1-1
        rect_instance(2, im, 2, 16, 0, 8, 8),    // under-detected pair ...
        rect_instance(3, im, 2, 26, 0, 8, 8),    // ... with gt 2
        rect_instance(4, im, 3, 0, 16, 8, 8),    // missed entirely
    };
    const std::vector<Instance> preds = {
        rect_instance(0, im, 1, 0, 0, 8, 8, 0.9),     // id assigned below
        rect_instance(0, im, 2, 16, 0, 18, 8, 0.85),  // spans gts 2+3
        rect_instance(0, im, 1, 40, 40, 8, 8, 0.8),   // spurious
    };
    std::vector<Instance> numbered = preds;
    for (std::size_t i = 0; i < numbered.size(); ++i) numbered[i].id = static_cast<int>(i) + 1;

    // Pairwise IOUs of the spanning prediction: 64/144 each, union 128/144.
    EvalConfig cfg;
    const auto grouped = confusion_matrix(prepare(gt, numbered), cfg);
    const auto& m = grouped.matrix;
    // rows/cols: 1, 2, 3, Background
    const std::vector<std::int64_t> expected = {
        1, 0, 0, 0,  //
        0, 2, 0, 0,  //
        0, 0, 0, 1,  //
        1, 0, 0, 0,  //
    };
    CHECK(m.counts == expected);

    EvalConfig no_group = cfg;
    no_group.enable_group_matching = false;
    const auto flat = confusion_matrix(prepare(gt, numbered), no_group);
    const std::vector<std::int64_t> expected_flat = {
        1, 0, 0, 0,  //
        0, 0, 0, 2,  //
        0, 0, 0, 1,  //
        1, 1, 0, 0,  //
    };
    CHECK(flat.matrix.counts == expected_flat);

    // Group matching only rescues unmatched items: background mass never grows.
    const auto bg = m.background();
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m.at(i, bg) <= flat.matrix.at(i, bg));
        CHECK(m.at(bg, i) <= flat.matrix.at(bg, i));
    }
}

TEST_CASE("confusion matrix normalization and cross-class cells") {
    DatasetDoc gt;
    gt.categories = three_classes();
    const ImageRecord im = make_image(1);
    gt.images = {im};
    gt.annotations = {rect_instance(1, im, 1, 0, 0, 8, 8)};
    const std::vector<Instance> preds = {rect_instance(1, im, 2, 0, 0, 8, 8, 0.9)};
    const auto summary = confusion_matrix(prepare(gt, preds), {});
    const auto& m = summary.matrix;
    CHECK(m.at(0, 1) == 1);  // class 1 gt predicted as class 2
    const auto norm = m.row_normalized();
    CHECK(norm[0 * m.size() + 1] == 1.0);
    // Background x Background pinned to zero.
    CHECK(m.at(m.background(), m.background()) == 0);
}

TEST_CASE("perfect predictions give a diagonal matrix and mAP 1.0") {
    DatasetDoc gt;
    gt.categories = three_classes();
    const ImageRecord im = make_image(1);
    gt.images = {im};
    gt.annotations = {rect_instance(1, im, 1, 0, 0, 8, 8, std::nullopt, 10.0),
                      rect_instance(2, im, 2, 16, 0, 8, 8, std::nullopt, 20.0),
                      rect_instance(3, im, 3, 32, 0, 8, 8, std::nullopt, 50.0)};
    std::vector<Instance> preds;
    for (const auto& a : gt.annotations) {
        Instance p = a;
        p.height_m.reset();
        p.score = 1.0;
        preds.push_back(p);
    }
    const auto report = evaluate(gt, preds, {});
    CHECK(report.map_bbox == 1.0);
    CHECK(report.map_mask == 1.0);
    for (const auto& [cls, ap] : report.ap_mask) CHECK(ap == 1.0);
    for (std::size_t r = 0; r < report.confusion.classes.size(); ++r)
        CHECK(report.confusion.at(r, r) == 1);
    for (const auto& [cls, acc] : report.per_class_accuracy) CHECK(acc == 1.0);
}

TEST_CASE("AP examples") {
    DatasetDoc gt;
    gt.categories = {{1, "building", {}}};
    const ImageRecord im = make_image(1);
    gt.images = {im};
    gt.annotations = {rect_instance(1, im, 1, 0, 0, 8, 8)};

    SECTION("single correct prediction scores 1.0") {
        const std::vector<Instance> preds = {rect_instance(1, im, 1, 0, 0, 8, 8, 0.9)};
        const auto corpus = prepare(gt, preds);
        const auto ap = average_precision(corpus, 1, GeometryMode::mask, 0.5);
        REQUIRE(ap.has_value());
        CHECK(*ap == 1.0);
    }
    SECTION("a higher-scored false positive halves the interpolated AP") {
        const std::vector<Instance> preds = {
            rect_instance(0, im, 1, 40, 40, 8, 8, 0.9),  // FP, id 1 after numbering
            rect_instance(0, im, 1, 0, 0, 8, 8, 0.8),    // TP
        };
        std::vector<Instance> numbered = preds;
        numbered[0].id = 1;
        numbered[1].id = 2;
        const auto ap = average_precision(prepare(gt, numbered), 1, GeometryMode::mask, 0.5);
        REQUIRE(ap.has_value());
        CHECK(*ap == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("no predictions at all scores 0") {
        gt.annotations.push_back(rect_instance(2, im, 1, 16, 0, 8, 8));
        const auto ap = average_precision(prepare(gt, {}), 1, GeometryMode::mask, 0.5);
        REQUIRE(ap.has_value());
        CHECK(*ap == 0.0);
    }
    SECTION("a class with no ground truth is undefined") {
        CHECK_FALSE(average_precision(prepare(gt, {}), 99, GeometryMode::mask, 0.5).has_value());
    }
}

TEST_CASE("AP matches the brute-force PR oracle on random corpora") {
    std::mt19937 rng(20240301);
    std::uniform_int_distribution<int> n_images(1, 3);
    std::uniform_int_distribution<int> n_items(0, 5);
    std::uniform_int_distribution<int> pos(0, 24);
    std::uniform_int_distribution<int> side(3, 10);
    std::uniform_int_distribution<int> cls(1, 2);
    std::uniform_real_distribution<double> score(0.05, 1.0);
    std::uniform_int_distribution<int> tie(0, 3);

    for (int trial = 0; trial < 120; ++trial) {
        DatasetDoc gt;
        gt.categories = {{1, "a", {}}, {2, "b", {}}};
        std::vector<Instance> preds;
        std::vector<oracle::ApGt> ogts;
        std::vector<oracle::ApPred> opreds;
        std::map<std::pair<std::int64_t, std::int64_t>, double> iou_table;
        std::map<std::int64_t, oracle::Grid> gt_grids;
        std::int64_t next_gt = 1, next_pred = 1;

        const int images = n_images(rng);
        for (int i = 1; i <= images; ++i) {
            const ImageRecord im = make_image(i, 32, 32);
            gt.images.push_back(im);
            const int gcount = n_items(rng);
            std::vector<std::pair<std::int64_t, oracle::Grid>> image_gts;
            for (int k = 0; k < gcount; ++k) {
                const int x = pos(rng), y = pos(rng);
                const int w = std::min(side(rng), 32 - x), h = std::min(side(rng), 32 - y);
                const int c = cls(rng);
                Instance a = rect_instance(next_gt, im, c, x, y, w, h);
                gt.annotations.push_back(a);
                ogts.push_back({next_gt, i, c});
                image_gts.emplace_back(next_gt, oracle::from_mask(*a.rle));
                ++next_gt;
            }
            const int pcount = n_items(rng);
            for (int k = 0; k < pcount; ++k) {
                const int x = pos(rng), y = pos(rng);
                const int w = std::min(side(rng), 32 - x), h = std::min(side(rng), 32 - y);
                const int c = cls(rng);
                double s = score(rng);
                if (tie(rng) == 0 && !opreds.empty()) s = opreds.back().score;  // force ties
                Instance p = rect_instance(next_pred, im, c, x, y, w, h, s);
                preds.push_back(p);
                opreds.push_back({next_pred, i, c, s});
                const oracle::Grid pg = oracle::from_mask(*p.rle);
                for (const auto& [gid, gg] : image_gts) {
                    if (oracle::area(gg) == 0 && oracle::area(pg) == 0) continue;
                    iou_table[{gid, next_pred}] = oracle::iou(gg, pg);
                }
                ++next_pred;
            }
        }

        const auto corpus = prepare(gt, preds);
        for (const int c : {1, 2}) {
            const auto got = average_precision(corpus, c, GeometryMode::mask, 0.5);
            const double expected = oracle::average_precision(ogts, opreds, c, 0.5, iou_table);
            if (expected < 0.0) {
                CHECK_FALSE(got.has_value());
            } else {
                REQUIRE(got.has_value());
                CHECK(*got == Catch::Approx(expected).margin(1e-9));
            }
        }

        // Input order must not matter.
        auto shuffled_gt = gt;
        std::shuffle(shuffled_gt.annotations.begin(), shuffled_gt.annotations.end(), rng);
        auto shuffled_preds = preds;
        std::shuffle(shuffled_preds.begin(), shuffled_preds.end(), rng);
        const auto corpus2 = prepare(shuffled_gt, shuffled_preds);
        for (const int c : {1, 2}) {
            const auto a1 = average_precision(corpus, c, GeometryMode::mask, 0.5);
            const auto a2 = average_precision(corpus2, c, GeometryMode::mask, 0.5);
            CHECK(a1.has_value() == a2.has_value());
            if (a1 && a2) CHECK(*a1 == *a2);
        }
    }
}

TEST_CASE("matching partitions every instance exactly once") {
    std::mt19937 rng(555);
    std::uniform_int_distribution<int> n_items(0, 8);
    std::uniform_int_distribution<int> pos(0, 24);
    std::uniform_int_distribution<int> side(3, 10);
    std::uniform_int_distribution<int> cls(1, 3);
    std::uniform_real_distribution<double> score(0.5, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Detection> gts, preds;
        const int gcount = n_items(rng), pcount = n_items(rng);
        for (int k = 0; k < gcount; ++k) {
            const int x = pos(rng), y = pos(rng);
            gts.push_back(rect_detection(k + 1, 1, cls(rng), 32, 32, x, y,
                                         std::min(side(rng), 32 - x), std::min(side(rng), 32 - y)));
        }
        for (int k = 0; k < pcount; ++k) {
            const int x = pos(rng), y = pos(rng);
            preds.push_back(rect_detection(100 + k, 1, cls(rng), 32, 32, x, y,
                                           std::min(side(rng), 32 - x), std::min(side(rng), 32 - y),
                                           score(rng)));
        }
        EvalConfig cfg;
        const auto result = match_image(gts, preds, cfg);
        std::map<std::int64_t, int> gt_seen, pred_seen;
        for (const auto& rec : result.matches) {
            for (const auto id : rec.gt_ids) ++gt_seen[id];
            for (const auto id : rec.pred_ids) ++pred_seen[id];
        }
        for (const auto id : result.unmatched_gt_ids) ++gt_seen[id];
        for (const auto id : result.unmatched_pred_ids) ++pred_seen[id];
        REQUIRE(gt_seen.size() == gts.size());
        REQUIRE(pred_seen.size() == preds.size());
        for (const auto& [id, n] : gt_seen) CHECK(n == 1);
        for (const auto& [id, n] : pred_seen) CHECK(n == 1);
    }
}

TEST_CASE("confusion matrix rows account for every ground truth") {
    std::mt19937 rng(808);
    std::uniform_int_distribution<int> n_items(0, 6);
    std::uniform_int_distribution<int> pos(0, 24);
    std::uniform_int_distribution<int> side(3, 10);
    std::uniform_int_distribution<int> cls(1, 3);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        DatasetDoc gt;
        gt.categories = three_classes();
        std::vector<Instance> preds;
        std::int64_t next_gt = 1, next_pred = 1;
        std::map<int, std::int64_t> gt_per_class;
        for (int i = 1; i <= 2; ++i) {
            const ImageRecord im = make_image(i, 32, 32);
            gt.images.push_back(im);
            for (int k = 0; k < n_items(rng); ++k) {
                const int x = pos(rng), y = pos(rng);
                const int c = cls(rng);
                gt.annotations.push_back(rect_instance(next_gt++, im, c, x, y,
                                                       std::min(side(rng), 32 - x),
                                                       std::min(side(rng), 32 - y)));
                ++gt_per_class[c];
            }
            for (int k = 0; k < n_items(rng); ++k) {
                const int x = pos(rng), y = pos(rng);
                preds.push_back(rect_instance(next_pred++, im, cls(rng), x, y,
                                              std::min(side(rng), 32 - x),
                                              std::min(side(rng), 32 - y), score(rng)));
            }
        }
        EvalConfig cfg;
        const auto summary = confusion_matrix(prepare(gt, preds), cfg);
        const auto& m = summary.matrix;
        std::int64_t retained = 0;
        for (const auto& p : preds)
            if (*p.score >= cfg.score_threshold) ++retained;

        for (std::size_t r = 0; r < m.classes.size(); ++r) {
            std::int64_t row_sum = 0;
            for (std::size_t c = 0; c < m.size(); ++c) row_sum += m.at(r, c);
            CHECK(row_sum == gt_per_class[m.classes[r].id]);
        }
        // Normalized rows sum to 1 (or stay all-zero).
        const auto norm = m.row_normalized();
        for (std::size_t r = 0; r < m.size(); ++r) {
            double row = 0.0;
            std::int64_t count_row = 0;
            for (std::size_t c = 0; c < m.size(); ++c) {
                row += norm[r * m.size() + c];
                count_row += m.at(r, c);
            }
            if (count_row > 0) CHECK(row == Catch::Approx(1.0).margin(1e-9));
        }
        // Over-detection absorbs predictions, so the matrix total never
        // exceeds gts + retained predictions.
        std::int64_t total = 0;
        for (const auto v : m.counts) total += v;
        CHECK(total <= static_cast<std::int64_t>(gt.annotations.size()) + retained);
    }
}

TEST_CASE("report serialization carries the table and CSV surfaces") {
    DatasetDoc gt;
    gt.categories = three_classes();
    const ImageRecord im = make_image(1);
    gt.images = {im};
    gt.annotations = {rect_instance(1, im, 1, 0, 0, 8, 8)};
    const std::vector<Instance> preds = {rect_instance(1, im, 1, 0, 0, 8, 8, 0.9)};
    const auto report = evaluate(gt, preds, {});

    const json j = report_to_json(report);
    CHECK(j["map"]["bbox"] == 1.0);
    CHECK(j["confusion_matrix"]["labels"].back() == "Background");
    CHECK(j["confusion_matrix"]["counts"].size() == 4);
    CHECK(j.contains("confusion_matrix_no_group"));
    CHECK(j.contains("per_class_accuracy"));

    const std::string table = report_table(report);
    CHECK(table.find("Ground Truth") != std::string::npos);
    CHECK(table.find("Background") != std::string::npos);
    CHECK(table.find("100%") != std::string::npos);

    const std::string csv = match_records_csv(report.match_records);
    CHECK(csv.starts_with("kind,image_id,gt_ids,pred_ids,iou\n"));
    CHECK(csv.find("one_to_one,1,1,1,1\n") != std::string::npos);
}

TEST_CASE("bbox and mask modes can disagree") {
    DatasetDoc gt;
    gt.categories = {{1, "building", {}}};
    const ImageRecord im = make_image(1);
    gt.images = {im};
    // L-shaped ground truth occupying half its bounding box.
    Instance l_shape;
    l_shape.id = 1;
    l_shape.image_id = 1;
    l_shape.category_id = 1;
    l_shape.rle = geoseg::union_masks(
        {rect_mask(64, 64, 0, 0, 4, 12), rect_mask(64, 64, 4, 8, 8, 4)});
    const auto box = l_shape.rle->bbox();
    l_shape.bbox = {static_cast<double>(box.x), static_cast<double>(box.y),
                    static_cast<double>(box.w), static_cast<double>(box.h)};
    l_shape.area = static_cast<double>(l_shape.rle->area());
    gt.annotations = {l_shape};

    // Prediction = the gt's bounding box: bbox IOU 1.0, mask IOU 80/144.
    const std::vector<Instance> preds = {rect_instance(1, im, 1, 0, 0, 12, 12, 0.9)};
    const auto corpus = prepare(gt, preds);
    const auto ap_bbox = average_precision(corpus, 1, GeometryMode::bbox, 0.5);
    const auto ap_mask = average_precision(corpus, 1, GeometryMode::mask, 0.5);
    REQUIRE(ap_bbox.has_value());
    REQUIRE(ap_mask.has_value());
    CHECK(*ap_bbox == 1.0);
    CHECK(*ap_mask == 1.0);  // 80/144 > 0.5 still matches
    const auto ap_mask_strict = average_precision(corpus, 1, GeometryMode::mask, 0.6);
    CHECK(*ap_mask_strict == 0.0);  // 0.556 < 0.6
    const auto ap_bbox_strict = average_precision(corpus, 1, GeometryMode::bbox, 0.6);
    CHECK(*ap_bbox_strict == 1.0);
}
