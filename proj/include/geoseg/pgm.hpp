#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "geoseg/error.hpp"
#include "geoseg/probability_map.hpp"

namespace geoseg {

// Netpbm PGM, the interchange format for single-channel maps. P5 (binary) and
// P2 (ASCII) are both read; samples wider than 8 bits are big-endian per spec.

namespace detail {

inline int next_pgm_token(std::istream& in) {
    // Skips whitespace and '#' comments, returns a non-negative integer.
    char c;
    while (in.get(c)) {
        if (c == '#') {
            while (in.get(c) && c != '\n') {
            }
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            in.unget();
            int v;
            if (in >> v) return v;
            break;
        }
    }
    throw Error("truncated PGM header");
}

}  // namespace detail

/// Load an 8-bit or 16-bit single-channel image, normalizing by its maxval.
inline ProbabilityMap load_probability_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2")
        throw Error(path.string() + ": not a PGM file (magic '" + magic + "')");

    const int width = detail::next_pgm_token(in);
    const int height = detail::next_pgm_token(in);
    const int maxval = detail::next_pgm_token(in);
    if (width <= 0 || height <= 0) throw Error(path.string() + ": bad PGM dimensions");
    if (maxval <= 0 || maxval > 65535) throw Error(path.string() + ": bad PGM maxval");

    ProbabilityMap map;
    map.width = width;
    map.height = height;
    map.values.resize(static_cast<std::size_t>(width) * height);

    if (magic == "P2") {
        for (auto& v : map.values) {
            const int s = detail::next_pgm_token(in);
            if (s > maxval) throw Error(path.string() + ": sample exceeds maxval");
            v = static_cast<float>(static_cast<double>(s) / maxval);
        }
        return map;
    }

    in.get();  // single whitespace byte after maxval
    const bool wide = maxval > 255;
    std::string raw(map.values.size() * (wide ? 2 : 1), '\0');
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw Error(path.string() + ": truncated PGM pixel data");
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const auto* b = reinterpret_cast<const unsigned char*>(raw.data());
        const int s = wide ? (b[2 * i] << 8) | b[2 * i + 1] : b[i];
        if (s > maxval) throw Error(path.string() + ": sample exceeds maxval");
        map.values[i] = static_cast<float>(static_cast<double>(s) / maxval);
    }
    return map;
}

/// Write as binary PGM, quantizing values to round(v * maxval).
inline void save_probability_map(const std::filesystem::path& path, const ProbabilityMap& map,
                                 int maxval = 255) {
    validate_map(map);
    if (maxval <= 0 || maxval > 65535) throw Error("bad PGM maxval");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P5\n" << map.width << " " << map.height << "\n" << maxval << "\n";
    const bool wide = maxval > 255;
    for (float v : map.values) {
        const int s = static_cast<int>(std::lround(static_cast<double>(v) * maxval));
        if (wide) out.put(static_cast<char>((s >> 8) & 0xff));
        out.put(static_cast<char>(s & 0xff));
    }
    if (!out) throw Error("cannot write " + path.string());
}

}  // namespace geoseg
