#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "fhtnet/core.hpp"
#include "fhtnet/net.hpp"
#include "fhtnet/oracle.hpp"
#include "fhtnet/parallel.hpp"
#include "fhtnet/synth.hpp"

namespace fhtnet::vp {

struct GridCell {
    int x = 0;
    int y = 0;
    bool operator==(const GridCell&) const = default;
};

/// Cell of a g x g grid over an n x n image: floor(coord * g / n), clamped to
/// the edge cells so out-of-frame points stay countable.
inline GridCell grid_cell(Point p, int image_side, int g) {
    if (g < 1) throw ArgumentError("grid_cell: grid must be >= 1");
    auto axis = [&](double coord) {
        const int c = static_cast<int>(std::floor(coord * g / image_side));
        return std::clamp(c, 0, g - 1);
    };
    return {axis(p.x), axis(p.y)};
}

/// Top-k heat-map pixels by descending brightness (row-major tie-break),
/// mapped into input coordinates through the network's coordinate trace.
inline std::vector<Point> predict_vp(const nn::Tensor& heatmap, int k,
                                     const nn::AffineTrace& trace = {}) {
    if (k < 1) throw ArgumentError("predict_vp: k must be >= 1");
    if (heatmap.rank() != 3 || heatmap.channels() != 1)
        throw ShapeError("predict_vp: expected a (1, h, w) heat map");
    if (!trace.invertible()) throw ArgumentError("predict_vp: coordinate trace is not invertible");
    const int h = heatmap.height(), w = heatmap.width();
    std::vector<int> order(static_cast<std::size_t>(h) * w);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return heatmap.data[static_cast<std::size_t>(a)] > heatmap.data[static_cast<std::size_t>(b)];
    });
    const int take = std::min<int>(k, static_cast<int>(order.size()));
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) {
        const int r = order[static_cast<std::size_t>(i)] / w;
        const int c = order[static_cast<std::size_t>(i)] % w;
        out.push_back({trace.map_x(c), trace.map_y(r)});
    }
    return out;
}

inline std::vector<Point> predict_vp(const GrayImage& heatmap, int k,
                                     const nn::AffineTrace& trace = {}) {
    nn::Tensor t = nn::Tensor::chw(1, heatmap.side(), heatmap.side());
    t.data = heatmap.data;
    return predict_vp(t, k, trace);
}

// ---------------------------------------------------------------------------
// Grid evaluation

struct SampleRecord {
    std::vector<GridCell> predicted; // distinct cells in descending-brightness order
    GridCell truth;
    bool top1 = false;
    bool top5 = false;
};

struct EvalReport {
    int grid = 0;
    double top1_error = 1.0;
    double top5_error = 1.0;
    std::vector<SampleRecord> per_sample;
};

/// Walks an ordered candidate list and keeps the first `k` distinct grid cells.
inline std::vector<GridCell> distinct_cells(const std::vector<Point>& candidates, int image_side,
                                            int g, int k) {
    std::vector<GridCell> cells;
    for (const auto& p : candidates) {
        const GridCell c = grid_cell(p, image_side, g);
        if (std::find(cells.begin(), cells.end(), c) == cells.end()) {
            cells.push_back(c);
            if (static_cast<int>(cells.size()) >= k) break;
        }
    }
    return cells;
}

/// Fraction of samples whose true cell is missed by all k predicted cells.
inline double top_k_error(const std::vector<std::vector<Point>>& predictions,
                          const std::vector<Point>& truths, int image_side, int g, int k) {
    if (predictions.size() != truths.size())
        throw UsageError("top_k_error: prediction/truth length mismatch");
    if (predictions.empty()) throw ArgumentError("top_k_error: empty evaluation set");
    int misses = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const GridCell truth = grid_cell(truths[i], image_side, g);
        const auto cells = distinct_cells(predictions[i], image_side, g, k);
        if (std::find(cells.begin(), cells.end(), truth) == cells.end()) ++misses;
    }
    return static_cast<double>(misses) / static_cast<double>(predictions.size());
}

inline EvalReport evaluate(const std::vector<std::vector<Point>>& predictions,
                           const std::vector<Point>& truths, int image_side, int g) {
    if (predictions.size() != truths.size())
        throw UsageError("evaluate: prediction/truth length mismatch");
    if (predictions.empty()) throw ArgumentError("evaluate: empty evaluation set");
    EvalReport rep;
    rep.grid = g;
    int miss1 = 0, miss5 = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        SampleRecord rec;
        rec.truth = grid_cell(truths[i], image_side, g);
        rec.predicted = distinct_cells(predictions[i], image_side, g, 5);
        rec.top1 = !rec.predicted.empty() && rec.predicted.front() == rec.truth;
        rec.top5 = std::find(rec.predicted.begin(), rec.predicted.end(), rec.truth) !=
                   rec.predicted.end();
        miss1 += rec.top1 ? 0 : 1;
        miss5 += rec.top5 ? 0 : 1;
        rep.per_sample.push_back(std::move(rec));
    }
    rep.top1_error = static_cast<double>(miss1) / static_cast<double>(predictions.size());
    rep.top5_error = static_cast<double>(miss5) / static_cast<double>(predictions.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Corruption experiment

struct CorruptionSpec {
    int rect_side = 0;
    double blur_kernel_sigma = 0.0; // <= 0 picks rect_side / 6
};

namespace detail {

// Mirror-with-edge reflection keeps a symmetric normalized kernel
// mass-preserving inside the window.
inline int reflect(int i, int size) {
    while (i < 0 || i >= size) {
        if (i < 0) i = -1 - i;
        if (i >= size) i = 2 * size - 1 - i;
    }
    return i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        total += k[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : k) v /= total;
    return k;
}

} // namespace detail

/// Gaussian-blurs the rect_side x rect_side window centered at the (rounded)
/// point, clipped to the frame; pixels outside the window are untouched.
inline GrayImage blur_corrupt(const GrayImage& img, Point center, const CorruptionSpec& spec) {
    require_valid(img);
    if (spec.rect_side < 0) throw ArgumentError("blur_corrupt: negative rectangle side");
    if (spec.rect_side == 0) return img;
    const double sigma =
        spec.blur_kernel_sigma > 0.0 ? spec.blur_kernel_sigma : spec.rect_side / 6.0;
    if (!(sigma > 0.0)) return img;

    const int n = img.side();
    const int cx = static_cast<int>(std::lround(center.x));
    const int cy = static_cast<int>(std::lround(center.y));
    const int x0 = std::clamp(cx - spec.rect_side / 2, 0, n);
    const int y0 = std::clamp(cy - spec.rect_side / 2, 0, n);
    const int x1 = std::clamp(x0 + spec.rect_side, 0, n);
    const int y1 = std::clamp(y0 + spec.rect_side, 0, n);
    const int rw = x1 - x0, rh = y1 - y0;
    if (rw <= 0 || rh <= 0) return img;

    const auto kernel = detail::gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);

    std::vector<double> tmp(static_cast<std::size_t>(rw) * rh);
    for (int y = 0; y < rh; ++y) // horizontal pass, reflected inside the window
        for (int x = 0; x < rw; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       img(y0 + y, x0 + detail::reflect(x + k, rw));
            tmp[static_cast<std::size_t>(y) * rw + x] = acc;
        }
    GrayImage out = img;
    for (int y = 0; y < rh; ++y) // vertical pass
        for (int x = 0; x < rw; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(detail::reflect(y + k, rh)) * rw + x];
            out(y0 + y, x0 + x) = acc;
        }
    return out;
}

struct SweepRow {
    int grid = 0;
    int k = 0;
    int rect_side = 0;
    double error = 1.0;
};

/// Error-vs-blur-size curves: for every rectangle side and grid size,
/// evaluates top-1 and top-5 errors of `predict` on the corrupted samples.
inline std::vector<SweepRow> corruption_sweep(
    const std::function<std::vector<Point>(const GrayImage&)>& predict,
    const std::vector<Sample>& samples, const std::vector<int>& rect_sides,
    const std::vector<int>& grids) {
    if (samples.empty()) throw ArgumentError("corruption_sweep: empty dataset");
    std::vector<SweepRow> rows;
    const int side = samples.front().image.side();
    for (int rect : rect_sides) {
        std::vector<std::vector<Point>> preds(samples.size());
        std::vector<Point> truths(samples.size());
        parallel_for(0, static_cast<int>(samples.size()), [&](int i) {
            const auto& s = samples[static_cast<std::size_t>(i)];
            const GrayImage corrupted = blur_corrupt(s.image, s.vp, CorruptionSpec{rect, 0.0});
            preds[static_cast<std::size_t>(i)] = predict(corrupted);
            truths[static_cast<std::size_t>(i)] = s.vp;
        });
        for (int g : grids)
            for (int k : {1, 5})
                rows.push_back({g, k, rect, top_k_error(preds, truths, side, g, k)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Non-learning baseline: forward transform, back projection, argmax.

struct ClassicalVpResult {
    Point point;
    bool low_confidence = false;
    GrayImage response;
};

/// 3x3 central-difference gradient magnitude, zeroed below its 90th percentile.
inline GrayImage gradient_magnitude_filter(const GrayImage& img) {
    const int n = img.side();
    GrayImage mag(img.p);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double gx = (img(y, std::min(x + 1, n - 1)) - img(y, std::max(x - 1, 0))) / 2.0;
            const double gy = (img(std::min(y + 1, n - 1), x) - img(std::max(y - 1, 0), x)) / 2.0;
            mag(y, x) = std::hypot(gx, gy);
        }
    std::vector<double> sorted = mag.data;
    const std::size_t at = sorted.size() * 9 / 10;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(at), sorted.end());
    const double threshold = sorted[at];
    for (auto& v : mag.data)
        if (v < threshold) v = 0.0;
    return mag;
}

/// Back-projected line response: every pixel accumulates the transform values
/// of all patterns through it, so concurrence points of several bright lines
/// dominate. Ties break row-major; a flat response is flagged.
inline ClassicalVpResult classical_vp(const GrayImage& img, bool edge_prefilter = false) {
    require_valid(img);
    const GrayImage work = edge_prefilter ? gradient_magnitude_filter(img) : img;
    ClassicalVpResult result;
    result.response = fht_transposed(fht_forward(work));
    const int n = result.response.side();
    int best = 0;
    double lo = result.response.data[0], hi = result.response.data[0];
    for (int i = 1; i < n * n; ++i) {
        const double v = result.response.data[static_cast<std::size_t>(i)];
        if (v > hi) {
            hi = v;
            best = i;
        }
        lo = std::min(lo, v);
    }
    result.point = {static_cast<double>(best % n), static_cast<double>(best / n)};
    result.low_confidence = !(hi > lo);
    return result;
}

// ---------------------------------------------------------------------------
// Bridge to the trainable network

/// Regression target: Gaussian bump (peak 1) of the given sigma, in input
/// pixel units, sampled at the heat-map pixels' input coordinates.
inline nn::Tensor vp_target_map(const nn::AffineTrace& trace, const std::vector<int>& out_shape,
                                Point vpt, double sigma) {
    if (out_shape.size() != 3 || out_shape[0] != 1)
        throw ShapeError("vp_target_map: output shape must be (1, h, w)");
    if (!(sigma > 0.0)) throw ArgumentError("vp_target_map: sigma must be positive");
    nn::Tensor t = nn::Tensor::chw(1, out_shape[1], out_shape[2]);
    for (int r = 0; r < out_shape[1]; ++r)
        for (int c = 0; c < out_shape[2]; ++c) {
            const double dy = trace.map_y(r) - vpt.y;
            const double dx = trace.map_x(c) - vpt.x;
            t.at(0, r, c) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    return t;
}

inline nn::Tensor image_tensor(const GrayImage& img) {
    nn::Tensor t = nn::Tensor::chw(1, img.side(), img.side());
    t.data = img.data;
    return t;
}

} // namespace fhtnet::vp
