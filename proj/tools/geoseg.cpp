// geoseg - batch front end for the dataset preparation and evaluation pipeline.

#include <CLI11.hpp>

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geoseg/geoseg.hpp"

namespace fs = std::filesystem;
using geoseg::PipelineConfig;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 operational failure (I/O), 2 usage or validation.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("cannot read " + path.string());
    return std::move(buf).str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("cannot write " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw IoError("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// Inputs and the effective configuration travel with every output so a result
// can always be traced back. No timestamps: identical runs stay byte-identical.
json provenance(const std::string& command, const PipelineConfig& cfg,
                const std::map<std::string, std::string>& input_digests) {
    json inputs = json::object();
    for (const auto& [path, digest] : input_digests) inputs[path] = "sha256:" + digest;
    return {{"tool", "geoseg"},
            {"version", kVersion},
            {"command", command},
            {"config", cfg.to_json()},
            {"inputs", inputs}};
}

std::string csv_provenance(const json& prov) {
    return "# geoseg " + prov["command"].get<std::string>() + "\n# config: " +
           prov["config"].dump() + "\n# inputs: " + prov["inputs"].dump() + "\n";
}

void print_findings(const std::vector<geoseg::Finding>& findings) {
    for (const auto& f : findings) std::cerr << f.to_line() << "\n";
}

// Inputs are keyed by file name, not full path, so identical runs rooted in
// different directories still emit byte-identical outputs.
void record_digest(std::map<std::string, std::string>& digests, const fs::path& path,
                   const std::string& bytes) {
    std::string key = path.filename().string();
    for (int n = 2; digests.contains(key); ++n)
        key = path.filename().string() + "#" + std::to_string(n);
    digests[key] = sha256_hex(bytes);
}

geoseg::coco::DatasetDoc load_dataset(const fs::path& path,
                                      std::map<std::string, std::string>& digests) {
    const std::string text = read_file(path);
    record_digest(digests, path, text);
    std::vector<geoseg::Finding> findings;
    auto doc = geoseg::coco::parse_dataset(text, &findings);
    print_findings(findings);  // warnings only; errors threw
    return doc;
}

std::vector<geoseg::coco::Instance> load_predictions(const geoseg::coco::DatasetDoc& gt,
                                                     const fs::path& path,
                                                     std::map<std::string, std::string>& digests) {
    const std::string text = read_file(path);
    record_digest(digests, path, text);
    return geoseg::coco::load_results(gt, text);
}

// Restrict a corpus to a seeded sample of its images.
geoseg::coco::DatasetDoc sample_corpus(const geoseg::coco::DatasetDoc& d, std::size_t n,
                                       std::uint64_t seed) {
    std::vector<std::int64_t> ids;
    for (const auto& im : d.images) ids.push_back(im.id);
    const auto selected = geoseg::sample_ids(ids, n, seed);
    std::set<std::int64_t> pick(selected.begin(), selected.end());
    geoseg::coco::DatasetDoc out;
    out.categories = d.categories;
    out.info = d.info;
    for (const auto& im : d.images)
        if (pick.contains(im.id)) out.images.push_back(im);
    for (const auto& a : d.annotations)
        if (pick.contains(a.image_id)) out.annotations.push_back(a);
    return out;
}

struct SampleFlags {
    std::int64_t count = -1;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--sample", count, "Keep only a seeded sample of N images");
        cmd->add_option("--seed", seed, "Seed for --sample (default 0)");
    }
    void apply(geoseg::coco::DatasetDoc& d) const {
        if (count >= 0) d = sample_corpus(d, static_cast<std::size_t>(count), seed);
    }
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// ---------------------------------------------------------------------------

int run_tile(const PipelineConfig& cfg, const fs::path& in, const fs::path& out_dir,
             const std::optional<fs::path>& image_dir, const SampleFlags& sample) {
    std::map<std::string, std::string> digests;
    auto doc = load_dataset(in, digests);
    sample.apply(doc);

    if (image_dir) {
        for (const auto& im : doc.images)
            if (!fs::exists(*image_dir / im.file_name))
                std::cerr << "WARNING\timage " << im.id << "\tsource file not found: "
                          << (*image_dir / im.file_name).string() << "\n";
    }

    auto tiled = geoseg::preprocess::tile_dataset(doc, cfg.tile);
    const json prov = provenance("tile", cfg, digests);
    tiled.info["provenance"] = prov;
    write_file(out_dir / "dataset.json", geoseg::coco::serialize_dataset(tiled));

    std::string manifest = csv_provenance(prov) + "file_name,source_scene,row,col\n";
    for (const auto& im : tiled.images) {
        manifest += im.file_name + "," + im.source_scene.value_or("") + "," +
                    std::to_string(im.tile_origin->first) + "," +
                    std::to_string(im.tile_origin->second) + "\n";
    }
    write_file(out_dir / "manifest.csv", manifest);
    std::cerr << "tiled " << doc.images.size() << " image(s) into " << tiled.images.size()
              << " tile(s), " << tiled.annotations.size() << " annotation fragment(s)\n";
    return 0;
}

int run_merge(const PipelineConfig& cfg, const fs::path& in, const fs::path& out,
              const std::optional<fs::path>& log_path) {
    std::map<std::string, std::string> digests;
    const auto doc = load_dataset(in, digests);
    std::vector<geoseg::preprocess::MergeGroup> log;
    auto merged = geoseg::preprocess::merge_dataset(doc, cfg.merge, cfg.scheme(), &log);
    const json prov = provenance("merge", cfg, digests);
    merged.info["provenance"] = prov;
    write_file(out, geoseg::coco::serialize_dataset(merged));

    if (log_path) {
        std::string text = csv_provenance(prov) + "image_id,merged_id,height_m,member_ids\n";
        for (const auto& g : log) {
            std::string members;
            for (std::size_t i = 0; i < g.member_ids.size(); ++i) {
                if (i) members += ';';
                members += std::to_string(g.member_ids[i]);
            }
            text += std::to_string(g.image_id) + "," + std::to_string(g.merged_id) + "," +
                    format_double(g.height_m) + "," + members + "\n";
        }
        write_file(*log_path, text);
    }
    std::cerr << "merged " << log.size() << " group(s); " << doc.annotations.size() << " -> "
              << merged.annotations.size() << " annotation(s)\n";
    return 0;
}

int run_convert(const PipelineConfig& cfg, const fs::path& maps_dir, const fs::path& out) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(maps_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    geoseg::coco::DatasetDoc doc;
    doc.categories = {{1, "building", json::object()}};
    std::map<std::string, std::string> digests;
    std::vector<std::string> errors;
    std::int64_t next_ann = 1;
    for (const auto& file : files) {
        std::int64_t image_id = 0;
        try {
            image_id = std::stoll(file.stem().string());
            if (image_id <= 0) throw std::invalid_argument("non-positive");
        } catch (const std::exception&) {
            errors.push_back(file.string() + ": file name is not a positive image id");
            continue;
        }
        try {
            const std::string bytes = read_file(file);
            record_digest(digests, file, bytes);
            const auto map = geoseg::load_probability_map(file);
            const auto geometries = geoseg::preprocess::semantic_to_instances(
                map, cfg.convert.window, cfg.convert.offset, cfg.connectivity(),
                cfg.convert.min_area);
            geoseg::coco::ImageRecord im;
            im.id = image_id;
            im.file_name = file.filename().string();
            im.width = map.width;
            im.height = map.height;
            doc.images.push_back(im);
            for (const auto& mask : geometries) {
                geoseg::coco::Instance inst;
                inst.id = next_ann++;
                inst.image_id = image_id;
                inst.category_id = 1;
                const auto box = mask.bbox();
                inst.bbox = {static_cast<double>(box.x), static_cast<double>(box.y),
                             static_cast<double>(box.w), static_cast<double>(box.h)};
                inst.area = static_cast<double>(mask.area());
                inst.rle = mask;
                doc.annotations.push_back(std::move(inst));
            }
        } catch (const std::exception& e) {
            errors.push_back(file.string() + ": " + e.what());
        }
    }
    for (const auto& e : errors) std::cerr << "ERROR\tmap\t" << e << "\n";
    if (doc.images.empty() && !errors.empty()) return 1;
    if (doc.images.empty()) {
        std::cerr << "no .pgm maps found in " << maps_dir.string() << "\n";
        return 1;
    }
    doc.info["provenance"] = provenance("convert", cfg, digests);
    write_file(out, geoseg::coco::serialize_dataset(doc));
    std::cerr << "converted " << doc.images.size() << " map(s) into " << doc.annotations.size()
              << " instance(s)";
    if (!errors.empty()) std::cerr << ", " << errors.size() << " map(s) failed";
    std::cerr << "\n";
    return 0;
}

int run_filter(const PipelineConfig& cfg, const fs::path& gt_path, const fs::path& preds_path,
               const fs::path& out, const std::optional<fs::path>& report_path) {
    std::map<std::string, std::string> digests;
    const auto gt = load_dataset(gt_path, digests);
    const auto preds = load_predictions(gt, preds_path, digests);
    auto [kept, report] = geoseg::quality::filter_dataset(gt, preds, cfg.filter);
    const json prov = provenance("filter", cfg, digests);
    kept.info["provenance"] = prov;
    write_file(out, geoseg::coco::serialize_dataset(kept));
    if (report_path)
        write_file(*report_path, csv_provenance(prov) + geoseg::quality::stats_csv(report));
    std::int64_t discarded = 0;
    for (const auto& s : report)
        if (s.discard) ++discarded;
    std::cerr << "kept " << kept.images.size() << " of " << report.size() << " image(s), discarded "
              << discarded << "\n";
    return 0;
}

int run_evaluate(const PipelineConfig& cfg, const fs::path& gt_path, const fs::path& preds_path,
                 const std::optional<fs::path>& out, const std::optional<fs::path>& table_path,
                 const std::optional<fs::path>& matches_path) {
    std::map<std::string, std::string> digests;
    const auto gt = load_dataset(gt_path, digests);
    const auto preds = load_predictions(gt, preds_path, digests);
    const auto report = geoseg::eval::evaluate(gt, preds, cfg.eval);

    json j = geoseg::eval::report_to_json(report);
    const json prov = provenance("evaluate", cfg, digests);
    j["provenance"] = prov;
    const std::string text = j.dump(2) + "\n";
    if (out && out->string() == "-")
        std::cout << text;
    else if (out)
        write_file(*out, text);

    const std::string table = geoseg::eval::report_table(report);
    if (table_path)
        write_file(*table_path, table + "\n" + csv_provenance(prov));
    else
        std::cout << table;
    if (matches_path)
        write_file(*matches_path,
                   csv_provenance(prov) + geoseg::eval::match_records_csv(report.match_records));
    return 0;
}

int run_stats(const PipelineConfig& cfg, const fs::path& in, const std::optional<std::string>& csv_prefix,
              const SampleFlags& sample) {
    std::map<std::string, std::string> digests;
    auto doc = load_dataset(in, digests);
    sample.apply(doc);

    std::map<int, std::int64_t> class_counts;
    for (const auto& c : doc.categories) class_counts[c.id] = 0;
    std::map<std::int64_t, std::int64_t> height_bins;  // bin index -> count
    for (const auto& a : doc.annotations) {
        ++class_counts[a.category_id];
        if (a.height_m)
            ++height_bins[static_cast<std::int64_t>(std::floor(*a.height_m / cfg.stats.bin_width))];
    }

    std::string class_csv = "category_id,name,count\n";
    std::cout << "Class histogram (" << doc.annotations.size() << " instances, "
              << doc.images.size() << " images):\n";
    for (const auto& c : doc.categories) {
        std::cout << "  " << c.id << "  " << c.name << "  " << class_counts[c.id] << "\n";
        class_csv += std::to_string(c.id) + "," + c.name + "," +
                     std::to_string(class_counts[c.id]) + "\n";
    }
    std::string height_csv = "bin_start,bin_end,count\n";
    std::cout << "Height histogram (bin width " << format_double(cfg.stats.bin_width) << " m):\n";
    if (!height_bins.empty()) {
        const std::int64_t last = height_bins.rbegin()->first;
        for (std::int64_t b = 0; b <= last; ++b) {
            const auto it = height_bins.find(b);
            const std::int64_t n = it == height_bins.end() ? 0 : it->second;
            const double lo = static_cast<double>(b) * cfg.stats.bin_width;
            const double hi = lo + cfg.stats.bin_width;
            std::cout << "  [" << format_double(lo) << ", " << format_double(hi) << ")  " << n
                      << "\n";
            height_csv += format_double(lo) + "," + format_double(hi) + "," + std::to_string(n) + "\n";
        }
    }
    if (csv_prefix) {
        const json prov = provenance("stats", cfg, digests);
        write_file(*csv_prefix + "_classes.csv", csv_provenance(prov) + class_csv);
        write_file(*csv_prefix + "_heights.csv", csv_provenance(prov) + height_csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geoseg - building-height dataset preparation and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    if (const char* env = std::getenv("GEOSEG_CONFIG")) config_path = env;
    app.add_option("--config", config_path, "JSON config file (or set GEOSEG_CONFIG)");

    // tile
    auto* tile = app.add_subcommand("tile", "Cut scenes into fixed-size grid tiles");
    fs::path tile_in, tile_out_dir;
    std::optional<fs::path> tile_images;
    SampleFlags tile_sample;
    int tile_size = 0;
    double tile_ratio = -1.0;
    tile->add_option("--in", tile_in, "Input dataset JSON")->required()->check(CLI::ExistingFile);
    tile->add_option("--out-dir", tile_out_dir, "Output directory")->required();
    tile->add_option("--images", tile_images, "Directory of source images (existence check only)");
    tile->add_option("--tile-size", tile_size, "Tile edge length in pixels");
    tile->add_option("--min-area-ratio", tile_ratio, "Keep fragments >= ratio x original area");
    tile_sample.attach(tile);

    // merge
    auto* merge = app.add_subcommand("merge", "Merge overlapping annotations, tallest wins");
    fs::path merge_in, merge_out;
    std::optional<fs::path> merge_log;
    double merge_threshold = -1.0;
    merge->add_option("--in", merge_in, "Input dataset JSON")->required()->check(CLI::ExistingFile);
    merge->add_option("--out", merge_out, "Output dataset JSON")->required();
    merge->add_option("--log", merge_log, "Merge log CSV");
    merge->add_option("--overlap-threshold", merge_threshold, "Max-overlap ratio above which to merge");

    // convert
    auto* convert = app.add_subcommand("convert", "Semantic maps to instance annotations");
    fs::path convert_maps, convert_out;
    int convert_window = 0, convert_conn = 0;
    double convert_offset = 0.0;
    std::int64_t convert_min_area = -1;
    convert->add_option("--maps", convert_maps, "Directory of <image_id>.pgm maps")
        ->required()
        ->check(CLI::ExistingDirectory);
    convert->add_option("--out", convert_out, "Output dataset JSON")->required();
    convert->add_option("--window", convert_window, "Adaptive threshold window (odd)");
    convert->add_option("--offset", convert_offset, "Adaptive threshold offset");
    convert->add_option("--connectivity", convert_conn, "Component connectivity, 4 or 8");
    convert->add_option("--min-area", convert_min_area, "Drop components below this pixel area");

    // filter
    auto* filter = app.add_subcommand("filter", "Discard images disagreeing with reference predictions");
    fs::path filter_gt, filter_preds, filter_out;
    std::optional<fs::path> filter_report;
    double filter_iou = -1.0, filter_discard = -1.0, filter_score = -1.0;
    filter->add_option("--gt", filter_gt, "Ground-truth dataset JSON")->required()->check(CLI::ExistingFile);
    filter->add_option("--preds", filter_preds, "Reference predictions (COCO results JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    filter->add_option("--out", filter_out, "Kept dataset JSON")->required();
    filter->add_option("--report", filter_report, "Per-image quality report CSV");
    filter->add_option("--iou", filter_iou, "Screening IOU threshold");
    filter->add_option("--discard-ratio", filter_discard, "Missing ratio above which to discard");
    filter->add_option("--score-threshold", filter_score, "Prediction confidence cut");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions: mAP, confusion matrix");
    fs::path eval_gt, eval_preds;
    std::optional<fs::path> eval_out, eval_table, eval_matches;
    std::string eval_mode;
    double eval_iou = -1.0, eval_score = -1.0;
    bool no_group = false;
    evaluate->add_option("--gt", eval_gt, "Ground-truth dataset JSON")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--preds", eval_preds, "Predictions (COCO results JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", eval_out, "Report JSON path ('-' for stdout)");
    evaluate->add_option("--table", eval_table, "Write the text table here instead of stdout");
    evaluate->add_option("--matches-csv", eval_matches, "Match record audit CSV");
    evaluate->add_option("--mode", eval_mode, "Matching geometry: bbox or mask");
    evaluate->add_option("--iou", eval_iou, "Matching IOU threshold");
    evaluate->add_option("--score-threshold", eval_score, "Confusion-matrix confidence cut");
    evaluate->add_flag("--no-group-matching", no_group, "Disable over/under-detection rescue");

    // stats
    auto* stats = app.add_subcommand("stats", "Class and height histograms");
    fs::path stats_in;
    std::optional<std::string> stats_csv_prefix;
    double stats_bin = 0.0;
    SampleFlags stats_sample;
    stats->add_option("--in", stats_in, "Input dataset JSON")->required()->check(CLI::ExistingFile);
    stats->add_option("--csv", stats_csv_prefix, "Write <prefix>_classes.csv and <prefix>_heights.csv");
    stats->add_option("--bin-width", stats_bin, "Height histogram bin width in meters");
    stats_sample.attach(stats);

    // Let the global --config appear after the subcommand name too.
    for (CLI::App* sub : {tile, merge, convert, filter, evaluate, stats}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            const std::string text = read_file(config_path);
            try {
                cfg.apply(json::parse(text));
            } catch (const json::parse_error& e) {
                throw geoseg::Error("config " + config_path + ": " + e.what());
            }
        }
        // Flags override the config file.
        if (tile->count("--tile-size")) cfg.tile.tile_size = tile_size;
        if (tile->count("--min-area-ratio")) cfg.tile.min_clipped_area_ratio = tile_ratio;
        if (merge->count("--overlap-threshold")) cfg.merge.overlap_threshold = merge_threshold;
        if (convert->count("--window")) cfg.convert.window = convert_window;
        if (convert->count("--offset")) cfg.convert.offset = convert_offset;
        if (convert->count("--connectivity")) cfg.convert.connectivity = convert_conn;
        if (convert->count("--min-area")) cfg.convert.min_area = convert_min_area;
        if (filter->count("--iou")) cfg.filter.iou_threshold = filter_iou;
        if (filter->count("--discard-ratio")) cfg.filter.discard_ratio = filter_discard;
        if (filter->count("--score-threshold")) cfg.filter.score_threshold = filter_score;
        if (evaluate->count("--mode")) cfg.set_mode(eval_mode);
        if (evaluate->count("--iou")) cfg.eval.iou_threshold = eval_iou;
        if (evaluate->count("--score-threshold")) cfg.eval.score_threshold = eval_score;
        if (no_group) cfg.eval.enable_group_matching = false;
        if (stats->count("--bin-width")) cfg.stats.bin_width = stats_bin;
        cfg.validate();

        if (tile->parsed()) return run_tile(cfg, tile_in, tile_out_dir, tile_images, tile_sample);
        if (merge->parsed()) return run_merge(cfg, merge_in, merge_out, merge_log);
        if (convert->parsed()) return run_convert(cfg, convert_maps, convert_out);
        if (filter->parsed()) return run_filter(cfg, filter_gt, filter_preds, filter_out, filter_report);
        if (evaluate->parsed())
            return run_evaluate(cfg, eval_gt, eval_preds, eval_out, eval_table, eval_matches);
        if (stats->parsed()) return run_stats(cfg, stats_in, stats_csv_prefix, stats_sample);
        return 2;
    } catch (const geoseg::ValidationError& e) {
        print_findings(e.findings());
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const geoseg::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const geoseg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
