#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "fhtnet/core.hpp"
#include "fhtnet/io_util.hpp"

namespace fhtnet {

/// Raw 8-bit grayscale raster (binary PGM, maxval <= 255).
struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint8_t> pixels; // row-major
};

namespace detail_pgm {

inline void skip_space_and_comments(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
}

inline int parse_int(const std::string& bytes, std::size_t& pos, const char* what) {
    skip_space_and_comments(bytes, pos);
    const std::size_t start = pos;
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1 << 30) throw FormatError(std::string("PGM: ") + what + " out of range", static_cast<long long>(start));
        ++pos;
    }
    if (pos == start)
        throw FormatError(std::string("PGM: expected ") + what, static_cast<long long>(start));
    return static_cast<int>(v);
}

} // namespace detail_pgm

inline PgmImage decode_pgm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw FormatError("PGM: missing P5 magic", 0);
    std::size_t pos = 2;
    PgmImage img;
    img.width = detail_pgm::parse_int(bytes, pos, "width");
    img.height = detail_pgm::parse_int(bytes, pos, "height");
    img.maxval = detail_pgm::parse_int(bytes, pos, "maxval");
    if (img.width < 1 || img.height < 1)
        throw FormatError("PGM: non-positive dimensions", static_cast<long long>(pos));
    if (img.maxval < 1 || img.maxval > 255)
        throw FormatError("PGM: only 8-bit maxval supported", static_cast<long long>(pos));
    if (pos >= bytes.size())
        throw FormatError("PGM: truncated header", static_cast<long long>(pos));
    ++pos; // single whitespace byte separates header from raster
    const std::size_t need = static_cast<std::size_t>(img.width) * img.height;
    if (bytes.size() - pos < need)
        throw FormatError("PGM: truncated raster data", static_cast<long long>(bytes.size()));
    img.pixels.resize(need);
    std::memcpy(img.pixels.data(), bytes.data() + pos, need);
    return img;
}

inline std::string encode_pgm(const PgmImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                      std::to_string(img.maxval) + "\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

inline PgmImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

inline void write_pgm(const std::filesystem::path& path, const PgmImage& img) {
    atomic_write_file(path, encode_pgm(img));
}

/// Quantizes unit-range values: byte = round(clamp(v, 0, 1) * 255).
inline PgmImage pgm_from_unit(const std::vector<double>& values, int width, int height) {
    PgmImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i], 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

/// Min-max normalizes arbitrary values into 0..255 (constant input -> 0).
inline PgmImage pgm_from_minmax(const std::vector<double>& values, int width, int height) {
    double lo = values.empty() ? 0.0 : values[0], hi = lo;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    PgmImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        img.pixels[i] = span > 0.0
                            ? static_cast<std::uint8_t>(std::lround((values[i] - lo) / span * 255.0))
                            : 0;
    return img;
}

/// PGM bytes scaled by maxval into [0, 1]; requires a square power-of-two side.
inline GrayImage gray_from_pgm(const PgmImage& pgm) {
    if (pgm.width != pgm.height)
        throw ArgumentError("PGM raster is not square: " + std::to_string(pgm.width) + "x" +
                            std::to_string(pgm.height));
    GrayImage img(exponent_for_side(pgm.width));
    for (std::size_t i = 0; i < pgm.pixels.size(); ++i)
        img.data[i] = static_cast<double>(pgm.pixels[i]) / pgm.maxval;
    return img;
}

/// Embeds an arbitrary raster into the next power-of-two square (top-left
/// corner, zero fill).
inline GrayImage gray_from_pgm_padded(const PgmImage& pgm) {
    int side = std::max(pgm.width, pgm.height);
    int e = 0;
    while ((1 << e) < side) ++e;
    GrayImage img(e);
    for (int y = 0; y < pgm.height; ++y)
        for (int x = 0; x < pgm.width; ++x)
            img(y, x) = static_cast<double>(pgm.pixels[static_cast<std::size_t>(y) * pgm.width + x]) /
                        pgm.maxval;
    return img;
}

// ---------------------------------------------------------------------------
// Raw float dumps: exact transform values, independent of PGM normalization.
// Layout: magic "FHTRAW1\n", u32 height, u32 width, f64 row-major payload,
// all little-endian.

inline constexpr char kRawMagic[8] = {'F', 'H', 'T', 'R', 'A', 'W', '1', '\n'};

struct RawImage {
    int height = 0;
    int width = 0;
    std::vector<double> data;
};

inline std::string encode_raw(const RawImage& img) {
    std::string out(kRawMagic, sizeof(kRawMagic));
    const std::uint32_t h = static_cast<std::uint32_t>(img.height);
    const std::uint32_t w = static_cast<std::uint32_t>(img.width);
    out.append(reinterpret_cast<const char*>(&h), 4);
    out.append(reinterpret_cast<const char*>(&w), 4);
    const std::size_t at = out.size();
    out.resize(at + img.data.size() * sizeof(double));
    std::memcpy(out.data() + at, img.data.data(), img.data.size() * sizeof(double));
    return out;
}

inline RawImage decode_raw(const std::string& bytes) {
    if (bytes.size() < sizeof(kRawMagic) || std::memcmp(bytes.data(), kRawMagic, sizeof(kRawMagic)) != 0)
        throw FormatError("raw dump: missing FHTRAW1 magic", 0);
    if (bytes.size() < sizeof(kRawMagic) + 8)
        throw FormatError("raw dump: truncated header", static_cast<long long>(bytes.size()));
    RawImage img;
    std::uint32_t h, w;
    std::memcpy(&h, bytes.data() + sizeof(kRawMagic), 4);
    std::memcpy(&w, bytes.data() + sizeof(kRawMagic) + 4, 4);
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    const std::size_t need = static_cast<std::size_t>(h) * w * sizeof(double);
    if (bytes.size() != sizeof(kRawMagic) + 8 + need)
        throw FormatError("raw dump: payload size mismatch", static_cast<long long>(bytes.size()));
    img.data.resize(static_cast<std::size_t>(h) * w);
    std::memcpy(img.data.data(), bytes.data() + sizeof(kRawMagic) + 8, need);
    return img;
}

inline void write_raw(const std::filesystem::path& path, const RawImage& img) {
    atomic_write_file(path, encode_raw(img));
}

inline RawImage read_raw(const std::filesystem::path& path) { return decode_raw(read_file_bytes(path)); }

/// Detects PGM vs raw dump by magic and returns a square power-of-two image.
inline GrayImage load_gray_auto(const std::filesystem::path& path, bool pad_to_pow2 = false) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() >= sizeof(kRawMagic) &&
        std::memcmp(bytes.data(), kRawMagic, sizeof(kRawMagic)) == 0) {
        const RawImage raw = decode_raw(bytes);
        if (raw.width != raw.height)
            throw ArgumentError("raw dump is not square");
        GrayImage img(exponent_for_side(raw.width));
        img.data = raw.data;
        return img;
    }
    const PgmImage pgm = decode_pgm(bytes);
    if (pad_to_pow2) return gray_from_pgm_padded(pgm);
    return gray_from_pgm(pgm);
}

} // namespace fhtnet
