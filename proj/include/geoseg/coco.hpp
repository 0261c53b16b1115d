#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoseg/error.hpp"
#include "geoseg/mask.hpp"
#include "geoseg/polygon.hpp"

namespace geoseg::coco {

using json = nlohmann::json;

struct ImageRecord {
    std::int64_t id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
    std::optional<std::string> source_scene;          // original full-resolution scene
    std::optional<std::pair<int, int>> tile_origin;   // (row, col) grid index
    json extra = json::object();                      // unrecognized keys, kept for round trips

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Category {
    int id = 0;
    std::string name;
    json extra = json::object();

    friend bool operator==(const Category&, const Category&) = default;
};

/// One annotation or prediction. Geometry is either a polygon list or an RLE
/// mask, never both. height_m is kept out of `attributes` in memory and stored
/// at attributes.height_m on disk.
struct Instance {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    int category_id = 0;
    std::vector<Polygon> polygons;
    std::optional<PixelMask> rle;
    std::array<double, 4> bbox{};  // x, y, w, h
    double area = 0.0;
    std::optional<double> height_m;
    std::optional<double> score;   // predictions only
    json attributes = json::object();
    json extra = json::object();

    bool has_geometry() const { return rle.has_value() || !polygons.empty(); }

    friend bool operator==(const Instance&, const Instance&) = default;
};

struct DatasetDoc {
    std::vector<ImageRecord> images;
    std::vector<Instance> annotations;
    std::vector<Category> categories;
    json info = json::object();

    const ImageRecord* find_image(std::int64_t id) const {
        for (const auto& im : images)
            if (im.id == id) return &im;
        return nullptr;
    }
    const Category* find_category(int id) const {
        for (const auto& c : categories)
            if (c.id == id) return &c;
        return nullptr;
    }

    friend bool operator==(const DatasetDoc&, const DatasetDoc&) = default;
};

namespace detail {

inline std::string format_meters(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

/// Ordered height bin edges in meters. Bins are left-open/right-closed:
/// (0, e1], (e1, e2], ..., (en, inf). Class ids are 1-based.
struct HeightClassScheme {
    std::vector<double> edges{15.0, 40.0};

    HeightClassScheme() = default;
    explicit HeightClassScheme(std::vector<double> e) : edges(std::move(e)) {
        if (edges.empty()) throw Error("height scheme needs at least one edge");
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            if (!(edges[i] < edges[i + 1])) throw Error("height scheme edges must be strictly increasing");
        if (edges.front() <= 0) throw Error("height scheme edges must be positive");
    }

    std::size_t num_classes() const { return edges.size() + 1; }

    /// 1-based class id; the first bin whose upper edge covers the height.
    int class_for(double height_m) const {
        if (height_m < 0) throw Error("negative height");
        const auto it = std::lower_bound(edges.begin(), edges.end(), height_m);
        return static_cast<int>(it - edges.begin()) + 1;
    }

    std::vector<std::string> class_names() const {
        std::vector<std::string> names;
        std::string prev = "0";
        for (double e : edges) {
            names.push_back(prev + "m-" + detail::format_meters(e) + "m");
            prev = detail::format_meters(e);
        }
        names.push_back(prev + "m+");
        return names;
    }

    std::vector<Category> categories() const {
        std::vector<Category> cats;
        const auto names = class_names();
        for (std::size_t i = 0; i < names.size(); ++i)
            cats.push_back({static_cast<int>(i) + 1, names[i], json::object()});
        return cats;
    }

    /// Reconstruct a scheme from a category table following the bin naming
    /// convention; nullopt when the table is anything else.
    static std::optional<HeightClassScheme> from_categories(const std::vector<Category>& cats) {
        if (cats.size() < 2) return std::nullopt;
        auto sorted = cats;
        std::sort(sorted.begin(), sorted.end(),
                  [](const Category& a, const Category& b) { return a.id < b.id; });
        std::vector<double> edges;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i].id != static_cast<int>(i) + 1) return std::nullopt;
            const std::string& name = sorted[i].name;
            if (i + 1 == sorted.size()) {
                if (name.size() < 3 || name.substr(name.size() - 2) != "m+") return std::nullopt;
            } else {
                const auto dash = name.find("m-");
                if (dash == std::string::npos || name.back() != 'm') return std::nullopt;
                try {
                    edges.push_back(std::stod(name.substr(dash + 2, name.size() - dash - 3)));
                } catch (const std::exception&) {
                    return std::nullopt;
                }
            }
        }
        try {
            HeightClassScheme scheme(edges);
            if (scheme.class_names() != [&] {
                    std::vector<std::string> names;
                    for (const auto& c : sorted) names.push_back(c.name);
                    return names;
                }())
                return std::nullopt;
            return scheme;
        } catch (const Error&) {
            return std::nullopt;
        }
    }
};

// ---------------------------------------------------------------------------
// Geometry interchange
// ---------------------------------------------------------------------------

/// Decode the compressed COCO RLE string form (6 bits per char offset by 48,
/// counts delta-coded against the value two places back).
inline std::vector<std::uint32_t> rle_counts_from_string(const std::string& s) {
    std::vector<std::int64_t> counts;
    std::size_t p = 0;
    while (p < s.size()) {
        std::int64_t x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= s.size()) throw Error("truncated compressed RLE string");
            const std::int64_t c = static_cast<std::int64_t>(s[p]) - 48;
            x |= (c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) x |= ~std::int64_t(0) << (5 * k);
        }
        if (counts.size() > 2) x += counts[counts.size() - 2];
        counts.push_back(x);
    }
    std::vector<std::uint32_t> out;
    out.reserve(counts.size());
    for (auto c : counts) {
        if (c < 0) throw Error("negative count in compressed RLE");
        out.push_back(static_cast<std::uint32_t>(c));
    }
    return out;
}

/// Rasterize or decode an instance's geometry at its host image size.
inline PixelMask instance_to_mask(const Instance& inst, const ImageRecord& img) {
    if (inst.image_id != img.id)
        throw Error("annotation " + std::to_string(inst.id) + " does not belong to image " +
                    std::to_string(img.id));
    if (inst.rle) {
        if (inst.rle->width() != img.width || inst.rle->height() != img.height)
            throw Error("annotation " + std::to_string(inst.id) + ": RLE size " +
                        std::to_string(inst.rle->width()) + "x" + std::to_string(inst.rle->height()) +
                        " does not match image " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
        return *inst.rle;
    }
    if (inst.polygons.empty())
        throw Error("annotation " + std::to_string(inst.id) + " has no geometry");
    std::vector<PixelMask> parts;
    parts.reserve(inst.polygons.size());
    for (const auto& poly : inst.polygons) {
        try {
            parts.push_back(rasterize(poly, img.width, img.height));
        } catch (const Error& e) {
            throw Error("annotation " + std::to_string(inst.id) + ": " + e.what());
        }
    }
    return parts.size() == 1 ? parts.front() : union_masks(parts);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t require_int(const json& v, const std::string& entity, const char* key) {
    if (!v.is_number_integer())
        throw ValidationError({{Finding::Severity::error, entity,
                                std::string(key) + " must be an integer"}});
    return v.get<std::int64_t>();
}

inline std::vector<Polygon> polygons_from_json(const json& seg, const std::string& entity,
                                               std::vector<Finding>& findings) {
    std::vector<Polygon> polys;
    for (const auto& part : seg) {
        if (!part.is_array() || part.size() < 6 || part.size() % 2 != 0) {
            findings.push_back({Finding::Severity::error, entity,
                                "polygon segmentation part must be a flat [x,y,...] array of >= 3 vertices"});
            continue;
        }
        Ring ring;
        for (std::size_t i = 0; i < part.size(); i += 2)
            ring.pts.push_back({part[i].get<double>(), part[i + 1].get<double>()});
        polys.push_back(Polygon{{std::move(ring)}});
    }
    return polys;
}

inline std::optional<PixelMask> rle_from_json(const json& seg, const std::string& entity,
                                              std::vector<Finding>& findings) {
    if (!seg.contains("size") || !seg["size"].is_array() || seg["size"].size() != 2) {
        findings.push_back({Finding::Severity::error, entity, "RLE segmentation missing size [h,w]"});
        return std::nullopt;
    }
    const int h = seg["size"][0].get<int>();
    const int w = seg["size"][1].get<int>();
    std::vector<std::uint32_t> counts;
    try {
        if (seg.contains("counts") && seg["counts"].is_string()) {
            counts = rle_counts_from_string(seg["counts"].get<std::string>());
        } else if (seg.contains("counts") && seg["counts"].is_array()) {
            for (const auto& c : seg["counts"]) {
                const auto v = c.get<std::int64_t>();
                if (v < 0) throw Error("negative RLE count");
                counts.push_back(static_cast<std::uint32_t>(v));
            }
        } else {
            findings.push_back({Finding::Severity::error, entity, "RLE segmentation missing counts"});
            return std::nullopt;
        }
        return PixelMask(w, h, counts);
    } catch (const Error& e) {
        findings.push_back({Finding::Severity::error, entity, e.what()});
        return std::nullopt;
    }
}

}  // namespace detail

/// Structural and invariant checks. Geometry-derived checks (tight bbox, area)
/// are done at parse time where the raw fields are at hand.
inline std::vector<Finding> validate(const DatasetDoc& doc) {
    std::vector<Finding> findings;
    std::set<std::int64_t> image_ids;
    for (const auto& im : doc.images) {
        const std::string entity = "image " + std::to_string(im.id);
        if (im.id <= 0) findings.push_back({Finding::Severity::error, entity, "id must be positive"});
        if (!image_ids.insert(im.id).second)
            findings.push_back({Finding::Severity::error, entity, "duplicate image id"});
        if (im.width <= 0 || im.height <= 0)
            findings.push_back({Finding::Severity::error, entity, "width/height must be positive"});
    }
    std::set<int> category_ids;
    for (const auto& c : doc.categories) {
        if (!category_ids.insert(c.id).second)
            findings.push_back({Finding::Severity::error, "category " + std::to_string(c.id),
                                "duplicate category id"});
    }
    const auto scheme = HeightClassScheme::from_categories(doc.categories);
    std::set<std::int64_t> ann_ids;
    for (const auto& a : doc.annotations) {
        const std::string entity = "annotation " + std::to_string(a.id);
        if (a.id <= 0) findings.push_back({Finding::Severity::error, entity, "id must be positive"});
        if (!ann_ids.insert(a.id).second)
            findings.push_back({Finding::Severity::error, entity, "duplicate annotation id"});
        if (!image_ids.contains(a.image_id))
            findings.push_back({Finding::Severity::error, entity,
                                "references missing image " + std::to_string(a.image_id)});
        if (!category_ids.contains(a.category_id))
            findings.push_back({Finding::Severity::error, entity,
                                "references missing category " + std::to_string(a.category_id)});
        if (!a.has_geometry())
            findings.push_back({Finding::Severity::error, entity, "has no geometry"});
        if (a.height_m && *a.height_m < 0)
            findings.push_back({Finding::Severity::error, entity, "negative height_m"});
        if (a.score)
            findings.push_back({Finding::Severity::error, entity,
                                "ground-truth annotation carries a score"});
        if (scheme && a.height_m && *a.height_m >= 0 &&
            category_ids.contains(a.category_id) &&
            scheme->class_for(*a.height_m) != a.category_id)
            findings.push_back({Finding::Severity::warning, entity,
                                "height " + detail::format_meters(*a.height_m) +
                                    "m maps to class " + std::to_string(scheme->class_for(*a.height_m)) +
                                    " but category_id is " + std::to_string(a.category_id)});
    }
    return findings;
}

/// Build a DatasetDoc from parsed JSON. Recomputes bbox/area when absent,
/// cross-checks them when present (bbox off by more than one pixel or area off
/// by more than 1% is an error). Throws ValidationError on any error finding.
inline DatasetDoc dataset_from_json(const json& doc, std::vector<Finding>* out_findings = nullptr) {
    if (!doc.is_object()) throw ValidationError({{Finding::Severity::error, "document", "not a JSON object"}});
    for (const char* key : {"images", "annotations", "categories"})
        if (doc.contains(key) && !doc[key].is_array())
            throw ValidationError({{Finding::Severity::error, "document",
                                    std::string(key) + " must be an array"}});
    std::vector<Finding> findings;
    DatasetDoc d;

    static const std::set<std::string> known_image_keys = {"id", "file_name", "width", "height",
                                                           "source_scene", "tile_origin"};
    for (const auto& j : doc.value("images", json::array())) {
        ImageRecord im;
        const std::string entity = "image " + (j.contains("id") ? j["id"].dump() : "?");
        try {
            im.id = detail::require_int(j.at("id"), entity, "id");
            im.file_name = j.value("file_name", "");
            im.width = static_cast<int>(detail::require_int(j.at("width"), entity, "width"));
            im.height = static_cast<int>(detail::require_int(j.at("height"), entity, "height"));
            if (j.contains("source_scene")) im.source_scene = j["source_scene"].get<std::string>();
            if (j.contains("tile_origin")) {
                const auto& t = j["tile_origin"];
                if (!t.is_array() || t.size() != 2)
                    findings.push_back({Finding::Severity::error, entity, "tile_origin must be [row, col]"});
                else
                    im.tile_origin = {t[0].get<int>(), t[1].get<int>()};
            }
        } catch (const json::exception& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        for (const auto& [key, value] : j.items())
            if (!known_image_keys.contains(key)) im.extra[key] = value;
        d.images.push_back(std::move(im));
    }

    static const std::set<std::string> known_category_keys = {"id", "name"};
    for (const auto& j : doc.value("categories", json::array())) {
        Category c;
        const std::string entity = "category " + (j.contains("id") ? j["id"].dump() : "?");
        try {
            c.id = static_cast<int>(detail::require_int(j.at("id"), entity, "id"));
            c.name = j.value("name", "");
        } catch (const json::exception& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        for (const auto& [key, value] : j.items())
            if (!known_category_keys.contains(key)) c.extra[key] = value;
        d.categories.push_back(std::move(c));
    }

    static const std::set<std::string> known_ann_keys = {"id",   "image_id", "category_id", "segmentation",
                                                         "bbox", "area",     "score",       "attributes"};
    for (const auto& j : doc.value("annotations", json::array())) {
        Instance a;
        const std::string entity = "annotation " + (j.contains("id") ? j["id"].dump() : "?");
        try {
            a.id = detail::require_int(j.at("id"), entity, "id");
            a.image_id = detail::require_int(j.at("image_id"), entity, "image_id");
            a.category_id = static_cast<int>(detail::require_int(j.at("category_id"), entity, "category_id"));
            if (j.contains("segmentation")) {
                const auto& seg = j["segmentation"];
                if (seg.is_array())
                    a.polygons = detail::polygons_from_json(seg, entity, findings);
                else if (seg.is_object())
                    a.rle = detail::rle_from_json(seg, entity, findings);
                else
                    findings.push_back({Finding::Severity::error, entity, "segmentation must be polygons or RLE"});
            }
            if (j.contains("score")) {
                a.score = j["score"].get<double>();
                if (!(*a.score >= 0.0 && *a.score <= 1.0))
                    findings.push_back({Finding::Severity::error, entity, "score outside [0,1]"});
            }
            if (j.contains("attributes") && j["attributes"].is_object()) {
                a.attributes = j["attributes"];
                if (a.attributes.contains("height_m")) {
                    a.height_m = a.attributes["height_m"].get<double>();
                    a.attributes.erase("height_m");
                }
            }
        } catch (const json::exception& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        for (const auto& [key, value] : j.items())
            if (!known_ann_keys.contains(key)) a.extra[key] = value;

        // Geometry-derived fields.
        if (j.contains("bbox") && (!j["bbox"].is_array() || j["bbox"].size() != 4)) {
            findings.push_back({Finding::Severity::error, entity, "bbox must be [x, y, w, h]"});
            continue;
        }
        if (a.has_geometry()) {
            const ImageRecord* img = nullptr;
            for (const auto& im : d.images)
                if (im.id == a.image_id) img = &im;
            if (img && img->width > 0 && img->height > 0) {
                try {
                    const PixelMask mask = instance_to_mask(a, *img);
                    const Box tight = mask.bbox();
                    const double computed_area = static_cast<double>(mask.area());
                    if (j.contains("bbox")) {
                        const auto& b = j["bbox"];
                        a.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                  b[3].get<double>()};
                        const double dx = std::abs(a.bbox[0] - tight.x);
                        const double dy = std::abs(a.bbox[1] - tight.y);
                        const double dw = std::abs(a.bbox[2] - tight.w);
                        const double dh = std::abs(a.bbox[3] - tight.h);
                        if (std::max({dx, dy, dw, dh}) > 1.0 + 1e-9)
                            findings.push_back(
                                {Finding::Severity::error, entity,
                                 "bbox deviates from tight geometry bbox by more than one pixel"});
                    } else {
                        a.bbox = {static_cast<double>(tight.x), static_cast<double>(tight.y),
                                  static_cast<double>(tight.w), static_cast<double>(tight.h)};
                    }
                    if (j.contains("area")) {
                        a.area = j["area"].get<double>();
                        if (std::abs(a.area - computed_area) > 0.01 * computed_area + 1e-9)
                            findings.push_back({Finding::Severity::error, entity,
                                                "area deviates from rasterized pixel count by more than 1%"});
                    } else {
                        a.area = computed_area;
                    }
                } catch (const Error& e) {
                    findings.push_back({Finding::Severity::error, entity, e.what()});
                }
            } else if (j.contains("bbox")) {
                const auto& b = j["bbox"];
                a.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
                if (j.contains("area")) a.area = j["area"].get<double>();
            }
        }
        d.annotations.push_back(std::move(a));
    }

    static const std::set<std::string> known_doc_keys = {"images", "annotations", "categories", "info"};
    if (doc.contains("info") && doc["info"].is_object()) d.info = doc["info"];
    for (const auto& [key, value] : doc.items())
        if (!known_doc_keys.contains(key)) d.info[key] = value;  // strays survive the round trip

    auto more = validate(d);
    findings.insert(findings.end(), more.begin(), more.end());
    if (out_findings) *out_findings = findings;
    for (const auto& f : findings)
        if (f.severity == Finding::Severity::error) throw ValidationError(findings);
    return d;
}

/// Parse and validate a COCO-style document. Warnings (if any) are returned
/// through out_findings; errors throw.
inline DatasetDoc parse_dataset(std::string_view text, std::vector<Finding>* out_findings = nullptr) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.byte, e.what());
    }
    return dataset_from_json(doc, out_findings);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline json segmentation_to_json(const Instance& a, const DatasetDoc& d) {
    if (a.rle) {
        json seg = json::object();
        seg["size"] = json::array({a.rle->height(), a.rle->width()});
        seg["counts"] = a.rle->runs();  // always emitted uncompressed
        return seg;
    }
    bool flat = true;
    for (const auto& poly : a.polygons)
        if (poly.rings.size() != 1) flat = false;
    if (!flat) {
        // Rings (holes) have no COCO polygon encoding; fall back to RLE.
        const ImageRecord* img = d.find_image(a.image_id);
        if (!img) throw Error("annotation " + std::to_string(a.id) + ": unresolvable image");
        Instance tmp = a;
        const PixelMask mask = instance_to_mask(tmp, *img);
        json seg = json::object();
        seg["size"] = json::array({mask.height(), mask.width()});
        seg["counts"] = mask.runs();
        return seg;
    }
    json seg = json::array();
    for (const auto& poly : a.polygons) {
        json ring = json::array();
        for (const auto& p : poly.rings.front().pts) {
            ring.push_back(p.x);
            ring.push_back(p.y);
        }
        seg.push_back(std::move(ring));
    }
    return seg;
}

}  // namespace detail

inline json dataset_to_json(const DatasetDoc& d) {
    json root = json::object();
    auto& images = root["images"] = json::array();
    for (const auto& im : d.images) {
        json j = im.extra.is_object() ? im.extra : json::object();
        j["id"] = im.id;
        j["file_name"] = im.file_name;
        j["width"] = im.width;
        j["height"] = im.height;
        if (im.source_scene) j["source_scene"] = *im.source_scene;
        if (im.tile_origin) j["tile_origin"] = json::array({im.tile_origin->first, im.tile_origin->second});
        images.push_back(std::move(j));
    }
    auto& cats = root["categories"] = json::array();
    for (const auto& c : d.categories) {
        json j = c.extra.is_object() ? c.extra : json::object();
        j["id"] = c.id;
        j["name"] = c.name;
        cats.push_back(std::move(j));
    }
    auto& anns = root["annotations"] = json::array();
    for (const auto& a : d.annotations) {
        json j = a.extra.is_object() ? a.extra : json::object();
        j["id"] = a.id;
        j["image_id"] = a.image_id;
        j["category_id"] = a.category_id;
        j["segmentation"] = detail::segmentation_to_json(a, d);
        j["bbox"] = a.bbox;
        j["area"] = a.area;
        if (a.score) j["score"] = *a.score;
        json attrs = a.attributes.is_object() ? a.attributes : json::object();
        if (a.height_m) attrs["height_m"] = *a.height_m;
        if (!attrs.empty()) j["attributes"] = std::move(attrs);
        anns.push_back(std::move(j));
    }
    root["info"] = d.info;
    return root;
}

/// Deterministic serialization: sorted keys, stable float formatting. Calling
/// it twice on the same document yields byte-identical text.
inline std::string serialize_dataset(const DatasetDoc& d) {
    return dataset_to_json(d).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Prediction results (COCO results format)
// ---------------------------------------------------------------------------

/// Load a COCO results array: [{image_id, category_id, segmentation|bbox, score}].
/// Instances get fresh sequential ids; a bbox-only result becomes a rectangle.
inline std::vector<Instance> load_results(const DatasetDoc& gt, std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.byte, e.what());
    }
    if (!doc.is_array())
        throw ValidationError({{Finding::Severity::error, "results", "results file must be a JSON array"}});

    std::vector<Finding> findings;
    std::vector<Instance> preds;
    std::int64_t next_id = 1;
    for (const auto& j : doc) {
        const std::string entity = "result " + std::to_string(next_id);
        Instance p;
        p.id = next_id++;
        try {
            p.image_id = detail::require_int(j.at("image_id"), entity, "image_id");
            p.category_id = static_cast<int>(detail::require_int(j.at("category_id"), entity, "category_id"));
        } catch (const json::exception& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        const ImageRecord* img = gt.find_image(p.image_id);
        if (!img) {
            findings.push_back({Finding::Severity::error, entity,
                                "references missing image " + std::to_string(p.image_id)});
            continue;
        }
        if (!gt.find_category(p.category_id))
            findings.push_back({Finding::Severity::error, entity,
                                "references missing category " + std::to_string(p.category_id)});
        try {
            if (!j.contains("score")) {
                findings.push_back({Finding::Severity::error, entity, "prediction has no score"});
                continue;
            }
            p.score = j["score"].get<double>();
            if (!(*p.score >= 0.0 && *p.score <= 1.0))
                findings.push_back({Finding::Severity::error, entity, "score outside [0,1]"});

            if (j.contains("bbox") && (!j["bbox"].is_array() || j["bbox"].size() != 4)) {
                findings.push_back({Finding::Severity::error, entity, "bbox must be [x, y, w, h]"});
                continue;
            }
            if (j.contains("segmentation")) {
                const auto& seg = j["segmentation"];
                if (seg.is_array())
                    p.polygons = detail::polygons_from_json(seg, entity, findings);
                else if (seg.is_object())
                    p.rle = detail::rle_from_json(seg, entity, findings);
            } else if (j.contains("bbox")) {
                const auto& b = j["bbox"];
                const double x = b[0].get<double>(), y = b[1].get<double>();
                const double w = b[2].get<double>(), h = b[3].get<double>();
                p.polygons = {Polygon{{Ring{{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}}}}};
            }
            if (!p.has_geometry()) {
                findings.push_back({Finding::Severity::error, entity, "prediction has no geometry"});
                continue;
            }
            if (j.contains("bbox")) {
                const auto& b = j["bbox"];
                p.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
            }
        } catch (const json::exception& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        try {
            const PixelMask mask = instance_to_mask(p, *img);
            p.area = static_cast<double>(mask.area());
            if (!j.contains("bbox")) {
                const Box tight = mask.bbox();
                p.bbox = {static_cast<double>(tight.x), static_cast<double>(tight.y),
                          static_cast<double>(tight.w), static_cast<double>(tight.h)};
            }
        } catch (const Error& e) {
            findings.push_back({Finding::Severity::error, entity, e.what()});
            continue;
        }
        preds.push_back(std::move(p));
    }
    for (const auto& f : findings)
        if (f.severity == Finding::Severity::error) throw ValidationError(findings);
    return preds;
}

}  // namespace geoseg::coco
