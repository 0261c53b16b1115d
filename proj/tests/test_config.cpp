#include <catch2/catch_amalgamated.hpp>

#include "geoseg/config.hpp"
#include "geoseg/sampling.hpp"

using geoseg::PipelineConfig;

TEST_CASE("config defaults pass validation") {
    PipelineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.merge.overlap_threshold == 0.5);
    CHECK(cfg.tile.tile_size == 512);
    CHECK(cfg.tile.min_clipped_area_ratio == 0.25);
    CHECK(cfg.height_edges == std::vector<double>{15.0, 40.0});
    CHECK(cfg.convert.window == 51);
    CHECK(cfg.eval.iou_threshold == 0.5);
    CHECK(cfg.stats.bin_width == 5.0);
}

TEST_CASE("nested config files override defaults") {
    PipelineConfig cfg;
    cfg.apply(nlohmann::json::parse(R"({
      "merge": {"overlap_threshold": 0.6},
      "tile": {"size": 256},
      "height": {"edges": [10, 20, 30]},
      "eval": {"mode": "bbox", "group_matching": false}
    })"));
    CHECK(cfg.merge.overlap_threshold == 0.6);
    CHECK(cfg.tile.tile_size == 256);
    CHECK(cfg.height_edges == std::vector<double>{10, 20, 30});
    CHECK(cfg.eval.geometry_mode == geoseg::eval::GeometryMode::bbox);
    CHECK_FALSE(cfg.eval.enable_group_matching);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.scheme().class_names() ==
          std::vector<std::string>{"0m-10m", "10m-20m", "20m-30m", "30m+"});
}

TEST_CASE("unknown keys are rejected") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(cfg.apply(nlohmann::json::parse(R"({"typo": {}})")), geoseg::Error);
    CHECK_THROWS_AS(cfg.apply(nlohmann::json::parse(R"({"merge": {"threshold": 0.5}})")),
                    geoseg::Error);
}

TEST_CASE("range validation catches out-of-domain values") {
    PipelineConfig cfg;
    cfg.merge.overlap_threshold = 1.01;
    CHECK_THROWS_AS(cfg.validate(), geoseg::Error);
    cfg = {};
    cfg.convert.window = 4;
    CHECK_THROWS_AS(cfg.validate(), geoseg::Error);
    cfg = {};
    cfg.stats.bin_width = 0.0;
    CHECK_THROWS_AS(cfg.validate(), geoseg::Error);
    cfg = {};
    cfg.eval.geometry_mode = geoseg::eval::GeometryMode::mask;
    CHECK_THROWS_AS(cfg.set_mode("polygon"), geoseg::Error);
}

TEST_CASE("config round-trips through its JSON form") {
    PipelineConfig cfg;
    cfg.merge.overlap_threshold = 0.7;
    cfg.eval.enable_group_matching = false;
    PipelineConfig other;
    other.apply(cfg.to_json());
    CHECK(other.to_json() == cfg.to_json());
}

TEST_CASE("seeded sampling is deterministic and order-free") {
    const std::vector<std::int64_t> ids = {9, 2, 5, 7, 1, 3, 8};
    const auto a = geoseg::sample_ids(ids, 3, 42);
    auto reversed = ids;
    std::reverse(reversed.begin(), reversed.end());
    const auto b = geoseg::sample_ids(reversed, 3, 42);
    CHECK(a == b);
    CHECK(a.size() == 3);
    CHECK(std::is_sorted(a.begin(), a.end()));
    const auto c = geoseg::sample_ids(ids, 3, 43);
    CHECK(a != c);  // different seed, different pick (true for these values)
    CHECK(geoseg::sample_ids(ids, 99, 1) == std::vector<std::int64_t>{1, 2, 3, 5, 7, 8, 9});
}
