#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "geoseg/quality_filter.hpp"
#include "support/oracles.hpp"

using geoseg::PixelMask;
using namespace geoseg::coco;
using namespace geoseg::quality;

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

Instance rect_instance(std::int64_t id, const ImageRecord& im, int x0, int y0, int side,
                       std::optional<double> score = std::nullopt) {
    Instance a;
    a.id = id;
    a.image_id = im.id;
    a.category_id = 1;
    a.rle = rect_mask(im.width, im.height, x0, y0, side, side);
    a.area = static_cast<double>(side) * side;
    a.bbox = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(side),
              static_cast<double>(side)};
    a.score = score;
    return a;
}

// k annotations at fixed slots, m predictions covering the first m slots.
std::pair<std::vector<Instance>, std::vector<Instance>> slots(const ImageRecord& im, int k, int m) {
    std::vector<Instance> gts, preds;
    for (int i = 0; i < k; ++i) gts.push_back(rect_instance(i + 1, im, 12 * i, 0, 8));
    for (int i = 0; i < m; ++i) preds.push_back(rect_instance(100 + i, im, 12 * i, 0, 8, 0.9));
    return {gts, preds};
}

}  // namespace

TEST_CASE("perfect agreement keeps the image with zero ratios") {
    const ImageRecord im = make_image(1);
    const auto [gts, preds] = slots(im, 4, 4);
    const auto stats = assess_image(im, gts, preds, {});
    CHECK(stats.n_annotations == 4);
    CHECK(stats.n_predictions == 4);
    CHECK(stats.missing_annotation_ratio == 0.0);
    CHECK(stats.missing_prediction_ratio == 0.0);
    CHECK_FALSE(stats.discard);
}

TEST_CASE("three of four annotations unmatched crosses the discard bar") {
    const ImageRecord im = make_image(1);
    const auto [gts, preds] = slots(im, 4, 1);
    const auto stats = assess_image(im, gts, preds, {});
    CHECK(stats.n_unmatched_annotations == 3);
    CHECK(stats.missing_annotation_ratio == 0.75);
    CHECK(stats.discard);
}

TEST_CASE("predictions on an unannotated image force a discard") {
    const ImageRecord im = make_image(1);
    const auto [gts, preds] = slots(im, 0, 3);
    const auto stats = assess_image(im, gts, preds, {});
    CHECK(stats.n_annotations == 0);
    CHECK(stats.missing_annotation_ratio == 0.0);  // 0/0 quotient
    CHECK(stats.missing_prediction_ratio == 1.0);
    CHECK(stats.discard);
}

TEST_CASE("empty images are kept") {
    const ImageRecord im = make_image(1);
    const auto stats = assess_image(im, {}, {}, {});
    CHECK(stats.missing_annotation_ratio == 0.0);
    CHECK(stats.missing_prediction_ratio == 0.0);
    CHECK_FALSE(stats.discard);
}

TEST_CASE("the strict >50% rule on the four canonical ratios") {
    const ImageRecord im = make_image(1);
    const auto check_ratio = [&](int k, int m, double expected_ratio, bool expected_discard) {
        const auto [gts, preds] = slots(im, k, m);
        const auto stats = assess_image(im, gts, preds, {});
        CHECK(stats.missing_annotation_ratio == Catch::Approx(expected_ratio).margin(1e-12));
        CHECK(stats.discard == expected_discard);
    };
    check_ratio(5, 3, 0.4, false);   // 2/5 unmatched: keep
    check_ratio(4, 2, 0.5, false);   // exactly 50%: keep (strictly above only)
    check_ratio(4, 1, 0.75, true);   // discard
    check_ratio(2, 0, 1.0, true);    // no predictions at all: discard
}

TEST_CASE("low-score predictions are cut before screening") {
    const ImageRecord im = make_image(1);
    std::vector<Instance> gts = {rect_instance(1, im, 0, 0, 8)};
    std::vector<Instance> preds = {rect_instance(100, im, 0, 0, 8, 0.2)};  // below default 0.5
    const auto stats = assess_image(im, gts, preds, {});
    CHECK(stats.n_predictions == 0);
    CHECK(stats.missing_annotation_ratio == 1.0);
    CHECK(stats.discard);
}

TEST_CASE("raising the IOU threshold never lowers the missing ratios") {
    std::mt19937 rng(17);
    const ImageRecord im = make_image(1, 48, 48);
    std::uniform_int_distribution<int> pos(0, 36);
    std::uniform_int_distribution<int> side(3, 10);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Instance> gts, preds;
        for (int i = 0; i < 5; ++i) {
            gts.push_back(rect_instance(i + 1, im, pos(rng), pos(rng), side(rng)));
            preds.push_back(rect_instance(100 + i, im, pos(rng), pos(rng), side(rng), 0.9));
        }
        FilterConfig lo, hi;
        lo.iou_threshold = 0.3;
        hi.iou_threshold = 0.7;
        const auto stats_lo = assess_image(im, gts, preds, lo);
        const auto stats_hi = assess_image(im, gts, preds, hi);
        CHECK(stats_hi.missing_annotation_ratio >= stats_lo.missing_annotation_ratio);
        CHECK(stats_hi.missing_prediction_ratio >= stats_lo.missing_prediction_ratio);
    }
}

TEST_CASE("filter_dataset keeps good images untouched and reports everything") {
    DatasetDoc d;
    d.categories = {{1, "building", {}}};
    const ImageRecord im1 = make_image(1);
    const ImageRecord im2 = make_image(2);
    const ImageRecord im3 = make_image(3);
    d.images = {im1, im2, im3};
    d.annotations = {rect_instance(1, im1, 0, 0, 8), rect_instance(2, im2, 0, 0, 8),
                     rect_instance(3, im2, 12, 0, 8), rect_instance(4, im3, 0, 0, 8)};
    // im1 and im3 covered; im2 takes only one of two.
    std::vector<Instance> preds = {rect_instance(100, im1, 0, 0, 8, 0.9),
                                   rect_instance(101, im2, 0, 0, 8, 0.9),
                                   rect_instance(102, im3, 0, 0, 8, 0.9)};
    FilterConfig cfg;
    cfg.discard_ratio = 0.4;  // 1/2 missing on im2 > 0.4
    const auto [kept, report] = filter_dataset(d, preds, cfg);
    REQUIRE(report.size() == 3);
    CHECK(report[0].image_id == 1);
    CHECK(report[1].image_id == 2);
    CHECK(report[2].image_id == 3);
    CHECK(report[1].discard);
    REQUIRE(kept.images.size() == 2);
    CHECK(kept.images[0].id == 1);
    CHECK(kept.images[1].id == 3);
    REQUIRE(kept.annotations.size() == 2);
    CHECK(kept.annotations[0] == d.annotations[0]);
    CHECK(kept.annotations[1] == d.annotations[3]);

    // Perfect agreement keeps the corpus identical.
    std::vector<Instance> perfect = {rect_instance(100, im1, 0, 0, 8, 0.9),
                                     rect_instance(101, im2, 0, 0, 8, 0.9),
                                     rect_instance(102, im2, 12, 0, 8, 0.9),
                                     rect_instance(103, im3, 0, 0, 8, 0.9)};
    const auto [all_kept, full_report] = filter_dataset(d, perfect, {});
    CHECK(all_kept == d);
    CHECK(full_report.size() == 3);

    // Empty prediction set discards every annotated image.
    const auto [none_kept, none_report] = filter_dataset(d, {}, {});
    CHECK(none_kept.images.empty());
    CHECK(none_report.size() == 3);

    Instance stray = rect_instance(200, im1, 0, 0, 8, 0.9);
    stray.image_id = 99;
    CHECK_THROWS_AS(filter_dataset(d, {stray}, {}), geoseg::Error);
}

TEST_CASE("report CSV has the documented columns") {
    DatasetDoc d;
    d.categories = {{1, "building", {}}};
    const ImageRecord im = make_image(1);
    d.images = {im};
    d.annotations = {rect_instance(1, im, 0, 0, 8)};
    const auto [kept, report] = filter_dataset(d, {rect_instance(100, im, 0, 0, 8, 0.9)}, {});
    const std::string csv = stats_csv(report);
    CHECK(csv.starts_with(
        "image_id,n_annotations,n_predictions,n_unmatched_annotations,"
        "n_unmatched_predictions,missing_annotation_ratio,missing_prediction_ratio,discard\n"));
    CHECK(csv.find("1,1,1,0,0,0,0,false\n") != std::string::npos);
}
