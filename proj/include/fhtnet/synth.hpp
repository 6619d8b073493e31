#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fhtnet/config.hpp"
#include "fhtnet/core.hpp"
#include "fhtnet/oracle.hpp"
#include "fhtnet/pgm.hpp"

namespace fhtnet::vp {

/// Annotated image: the vanishing point is in pixel coordinates and may lie
/// outside the frame.
struct Sample {
    GrayImage image;
    Point vp;
    std::vector<LineParams> gen_lines; // convergent generators (in-memory only)
    std::string name;                  // file stem once written
};

/// Generator settings. Slopes are dy/dx, i.e. the canonical mostly-horizontal
/// family is [0, 1).
struct SynthConfig {
    int image_side = 64;
    int n_samples = 100;
    int convergent_min = 3, convergent_max = 5;
    int distractor_min = 0, distractor_max = 2;
    double intensity_min = 0.4, intensity_max = 0.9;
    double distractor_intensity_min = 0.4, distractor_intensity_max = 1.0;
    double width_min = 0.7, width_max = 1.4;
    double slope_min = 0.05, slope_max = 0.9;
    double noise_sigma = 0.05;
    double vp_x_min = 8.0, vp_x_max = 56.0;
    double vp_y_min = 8.0, vp_y_max = 56.0;
    double distractor_min_dist = 6.0; // minimum distance from the VP to a distractor line
    std::uint64_t seed = 1;

    void validate() const {
        if (image_side < 2 || (image_side & (image_side - 1)))
            throw ConfigError("synth: image_side must be a power of two >= 2");
        if (n_samples < 1) throw ConfigError("synth: n_samples must be positive");
        if (convergent_min < 2 || convergent_max < convergent_min)
            throw ConfigError("synth: need at least two convergent lines per sample");
        if (distractor_min < 0 || distractor_max < distractor_min)
            throw ConfigError("synth: bad distractor range");
        if (!(width_min > 0.0) || width_max < width_min) throw ConfigError("synth: bad width range");
        if (intensity_max < intensity_min || distractor_intensity_max < distractor_intensity_min)
            throw ConfigError("synth: bad intensity range");
        if (slope_max < slope_min) throw ConfigError("synth: bad slope range");
        if (noise_sigma < 0.0) throw ConfigError("synth: negative noise sigma");
        if (vp_x_max < vp_x_min || vp_y_max < vp_y_min) throw ConfigError("synth: bad vp region");
    }
};

namespace detail {

// Explicit uniform/normal transforms keep datasets byte-identical for a seed
// independent of the standard library's distribution implementations.
struct Rand {
    std::mt19937_64 rng;
    explicit Rand(std::uint64_t seed) : rng(seed) {}

    double unit() { return static_cast<double>(rng() >> 11) * 0x1p-53; } // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double normal(double sigma) {
        const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53; // (0, 1]
        const double u2 = unit();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

/// Anti-aliased line y = y0 + m*x, max-blended: per pixel the coverage falls
/// off linearly from 1 inside the half-width to 0 one pixel further out.
inline void draw_line(GrayImage& img, double y0, double m, double width, double intensity) {
    const int n = img.side();
    const double norm = std::sqrt(1.0 + m * m);
    for (int x = 0; x < n; ++x) {
        const double yc = y0 + m * x;
        const int lo = static_cast<int>(std::floor(yc - width - 1.5));
        const int hi = static_cast<int>(std::ceil(yc + width + 1.5));
        for (int y = std::max(0, lo); y <= std::min(n - 1, hi); ++y) {
            const double dist = std::abs(y - yc) / norm;
            const double cov = std::clamp(width + 0.5 - dist, 0.0, 1.0);
            if (cov <= 0.0) continue;
            double& px = img(y, x);
            px = std::max(px, intensity * cov);
        }
    }
}

} // namespace detail

inline Sample generate_sample(const SynthConfig& cfg, detail::Rand& rand) {
    Sample s;
    s.image = GrayImage(exponent_for_side(cfg.image_side));
    s.vp.x = rand.uniform(cfg.vp_x_min, cfg.vp_x_max);
    s.vp.y = rand.uniform(cfg.vp_y_min, cfg.vp_y_max);

    const int n_conv = rand.uniform_int(cfg.convergent_min, cfg.convergent_max);
    for (int i = 0; i < n_conv; ++i) {
        const double m = rand.uniform(cfg.slope_min, cfg.slope_max);
        const double width = rand.uniform(cfg.width_min, cfg.width_max);
        const double intensity = rand.uniform(cfg.intensity_min, cfg.intensity_max);
        const double y0 = s.vp.y - m * s.vp.x;
        detail::draw_line(s.image, y0, m, width, intensity);
        s.gen_lines.push_back({m, -1.0, m * s.vp.x - s.vp.y});
    }

    const int n_dis = rand.uniform_int(cfg.distractor_min, cfg.distractor_max);
    for (int i = 0; i < n_dis; ++i) {
        const double m = rand.uniform(cfg.slope_min, cfg.slope_max);
        const double width = rand.uniform(cfg.width_min, cfg.width_max);
        const double intensity =
            rand.uniform(cfg.distractor_intensity_min, cfg.distractor_intensity_max);
        // keep the line away from the VP so it never joins the convergent bundle
        double y0 = 0.0;
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            y0 = rand.uniform(-0.25 * cfg.image_side, 1.25 * cfg.image_side);
            const double dist = std::abs(m * s.vp.x - s.vp.y + y0) / std::sqrt(m * m + 1.0);
            placed = dist >= cfg.distractor_min_dist;
        }
        if (placed) detail::draw_line(s.image, y0, m, width, intensity);
    }

    if (cfg.noise_sigma > 0.0)
        for (auto& v : s.image.data) v += rand.normal(cfg.noise_sigma);
    for (auto& v : s.image.data) v = std::clamp(v, 0.0, 1.0);
    return s;
}

inline std::vector<Sample> synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    detail::Rand rand(cfg.seed);
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(cfg.n_samples));
    char name[32];
    for (int i = 0; i < cfg.n_samples; ++i) {
        Sample s = generate_sample(cfg, rand);
        std::snprintf(name, sizeof(name), "%05d.pgm", i);
        s.name = name;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// On-disk dataset: one binary PGM per sample, annotations.csv with header
// "filename,x,y", manifest.txt with the generator settings.

inline std::string manifest_text(const SynthConfig& cfg) {
    char buf[512];
    std::string out;
    auto add_int = [&](const char* k, long long v) {
        std::snprintf(buf, sizeof(buf), "%s=%lld\n", k, v);
        out += buf;
    };
    auto add_num = [&](const char* k, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.17g\n", k, v);
        out += buf;
    };
    add_int("image_side", cfg.image_side);
    add_int("n_samples", cfg.n_samples);
    add_int("convergent_min", cfg.convergent_min);
    add_int("convergent_max", cfg.convergent_max);
    add_int("distractor_min", cfg.distractor_min);
    add_int("distractor_max", cfg.distractor_max);
    add_num("intensity_min", cfg.intensity_min);
    add_num("intensity_max", cfg.intensity_max);
    add_num("distractor_intensity_min", cfg.distractor_intensity_min);
    add_num("distractor_intensity_max", cfg.distractor_intensity_max);
    add_num("width_min", cfg.width_min);
    add_num("width_max", cfg.width_max);
    add_num("slope_min", cfg.slope_min);
    add_num("slope_max", cfg.slope_max);
    add_num("noise_sigma", cfg.noise_sigma);
    add_num("vp_x_min", cfg.vp_x_min);
    add_num("vp_x_max", cfg.vp_x_max);
    add_num("vp_y_min", cfg.vp_y_min);
    add_num("vp_y_max", cfg.vp_y_max);
    add_num("distractor_min_dist", cfg.distractor_min_dist);
    add_int("seed", static_cast<long long>(cfg.seed));
    return out;
}

inline SynthConfig synth_config_from(const RunConfig& rc) {
    SynthConfig cfg;
    cfg.image_side = static_cast<int>(rc.get_int("image_side", cfg.image_side));
    cfg.n_samples = static_cast<int>(rc.get_int("n_samples", cfg.n_samples));
    cfg.convergent_min = static_cast<int>(rc.get_int("convergent_min", cfg.convergent_min));
    cfg.convergent_max = static_cast<int>(rc.get_int("convergent_max", cfg.convergent_max));
    cfg.distractor_min = static_cast<int>(rc.get_int("distractor_min", cfg.distractor_min));
    cfg.distractor_max = static_cast<int>(rc.get_int("distractor_max", cfg.distractor_max));
    cfg.intensity_min = rc.get_double("intensity_min", cfg.intensity_min);
    cfg.intensity_max = rc.get_double("intensity_max", cfg.intensity_max);
    cfg.distractor_intensity_min =
        rc.get_double("distractor_intensity_min", cfg.distractor_intensity_min);
    cfg.distractor_intensity_max =
        rc.get_double("distractor_intensity_max", cfg.distractor_intensity_max);
    cfg.width_min = rc.get_double("width_min", cfg.width_min);
    cfg.width_max = rc.get_double("width_max", cfg.width_max);
    cfg.slope_min = rc.get_double("slope_min", cfg.slope_min);
    cfg.slope_max = rc.get_double("slope_max", cfg.slope_max);
    cfg.noise_sigma = rc.get_double("noise_sigma", cfg.noise_sigma);
    cfg.vp_x_min = rc.get_double("vp_x_min", cfg.vp_x_min);
    cfg.vp_x_max = rc.get_double("vp_x_max", cfg.vp_x_max);
    cfg.vp_y_min = rc.get_double("vp_y_min", cfg.vp_y_min);
    cfg.vp_y_max = rc.get_double("vp_y_max", cfg.vp_y_max);
    cfg.distractor_min_dist = rc.get_double("distractor_min_dist", cfg.distractor_min_dist);
    cfg.seed = static_cast<std::uint64_t>(rc.get_int("seed", static_cast<long long>(cfg.seed)));
    return cfg;
}

inline const std::vector<std::string>& synth_config_keys() {
    static const std::vector<std::string> keys = {
        "image_side", "n_samples", "convergent_min", "convergent_max", "distractor_min",
        "distractor_max", "intensity_min", "intensity_max", "distractor_intensity_min",
        "distractor_intensity_max", "width_min", "width_max", "slope_min", "slope_max",
        "noise_sigma", "vp_x_min", "vp_x_max", "vp_y_min", "vp_y_max", "distractor_min_dist",
        "seed"};
    return keys;
}

inline void write_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                          const SynthConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::string csv = "filename,x,y\n";
    char row[160];
    for (const auto& s : samples) {
        write_pgm(dir / s.name, pgm_from_unit(s.image.data, s.image.side(), s.image.side()));
        std::snprintf(row, sizeof(row), "%s,%.17g,%.17g\n", s.name.c_str(), s.vp.x, s.vp.y);
        csv += row;
    }
    atomic_write_file(dir / "annotations.csv", csv);
    atomic_write_file(dir / "manifest.txt", manifest_text(cfg));
}

inline std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
    const std::string csv = read_file_bytes(dir / "annotations.csv");
    std::stringstream ss(csv);
    std::string line;
    if (!std::getline(ss, line) || RunConfig::trim(line) != "filename,x,y")
        throw FormatError("annotations.csv: expected header 'filename,x,y'");
    std::vector<Sample> out;
    int lineno = 1;
    while (std::getline(ss, line)) {
        ++lineno;
        line = RunConfig::trim(line);
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw FormatError("annotations.csv: malformed row at line " + std::to_string(lineno));
        Sample s;
        s.name = line.substr(0, c1);
        s.vp.x = RunConfig::parse_double("x", line.substr(c1 + 1, c2 - c1 - 1));
        s.vp.y = RunConfig::parse_double("y", line.substr(c2 + 1));
        s.image = gray_from_pgm(read_pgm(dir / s.name));
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace fhtnet::vp
