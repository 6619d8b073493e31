#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fhtnet/errors.hpp"

namespace fhtnet {

/// Single-channel square raster with side 2^p, row-major, indexed (row y, column x).
struct GrayImage {
    int p = 0;
    std::vector<double> data;

    GrayImage() : data(1, 0.0) {}
    explicit GrayImage(int exponent) : p(exponent) {
        if (p < 0 || p > 15)
            throw ArgumentError("GrayImage: exponent must be in [0, 15], got " + std::to_string(p));
        data.assign(static_cast<std::size_t>(side()) * side(), 0.0);
    }

    int side() const { return 1 << p; }

    double& operator()(int y, int x) { return data[static_cast<std::size_t>(y) * side() + x]; }
    double operator()(int y, int x) const { return data[static_cast<std::size_t>(y) * side() + x]; }

    bool operator==(const GrayImage&) const = default;
};

/// Throws unless the image satisfies its size invariant.
inline void require_valid(const GrayImage& img) {
    const std::size_t n = static_cast<std::size_t>(img.side());
    if (img.p < 0 || img.data.size() != n * n)
        throw ArgumentError("GrayImage: data length does not match 2^p x 2^p");
}

/// Exponent e with 2^e == side; throws for non-power-of-two sides.
inline int exponent_for_side(int side) {
    if (side < 1) throw ArgumentError("image side must be positive");
    int e = 0;
    while ((1 << e) < side) ++e;
    if ((1 << e) != side)
        throw ArgumentError("image side " + std::to_string(side) + " is not a power of two");
    return e;
}

/// Identifies one dyadic pattern: shift t (total descent in pixels over the
/// full width) and cyclic start row s.
struct PatternId {
    int t = 0;
    int s = 0;
};

/// Cell of a pattern: column x, row y.
struct PatternCell {
    int x = 0;
    int y = 0;
    bool operator==(const PatternCell&) const = default;
};

/// Vertical offset of the dyadic pattern with shift t at column x on a 2^p-wide
/// image: H(x,t) = sum over set bits r of t of round(2^r * x / (2^p - 1)),
/// rounding to nearest. Ties cannot occur because the denominator is odd.
inline int indentation(int x, int t, int p) {
    if (p < 0 || p > 30) throw ArgumentError("indentation: exponent out of range");
    const std::int64_t n = std::int64_t{1} << p;
    if (x < 0 || x >= n || t < 0 || t >= n)
        throw ArgumentError("indentation: x and t must lie in [0, 2^p)");
    if (p == 0) return 0;
    const std::int64_t d = n - 1;
    std::int64_t h = 0;
    for (int r = 0; r < p; ++r) {
        if ((t >> r) & 1) {
            const std::int64_t num = static_cast<std::int64_t>(x) << r;
            h += (2 * num + d) / (2 * d); // round-to-nearest, exact integer arithmetic
        }
    }
    return static_cast<int>(h);
}

/// All cells of the pattern `id`, one per column, rows wrapping mod n.
inline std::vector<PatternCell> pattern(PatternId id, int p) {
    if (p < 0 || p > 15) throw ArgumentError("pattern: exponent out of range");
    const int n = 1 << p;
    if (id.t < 0 || id.t >= n || id.s < 0 || id.s >= n)
        throw ArgumentError("pattern: invalid PatternId for side " + std::to_string(n));
    std::vector<PatternCell> cells(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
        cells[static_cast<std::size_t>(x)] = {x, (id.s + indentation(x, id.t, p)) & (n - 1)};
    return cells;
}

/// Reverses the row order: output row i = input row n-1-i. Involution.
inline GrayImage flip_rows(const GrayImage& img) {
    require_valid(img);
    const int n = img.side();
    GrayImage out(img.p);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            out(y, x) = img(n - 1 - y, x);
    return out;
}

/// Swaps rows and columns.
inline GrayImage transpose_image(const GrayImage& img) {
    require_valid(img);
    const int n = img.side();
    GrayImage out(img.p);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            out(y, x) = img(x, y);
    return out;
}

/// Addition counter for instrumented transforms.
struct FhtOpCount {
    std::uint64_t additions = 0;
};

namespace detail {

// Halving scheme. Partial-sum table for strips of width w: entry
// (strip u, local shift t, start row s) lives at cur[(u*w + t)*n + s].
// Merging strips 2j and 2j+1 pairs local shift floor(t'/2) in both halves and
// rotates the right half down by ceil(t'/2) rows, so that after log2(n) stages
// the per-column offsets equal indentation(x, t, p). One addition per entry
// per stage: n^2 * log2(n) additions in total.
template <bool Count>
GrayImage fht_forward_impl(const GrayImage& img, FhtOpCount* count) {
    require_valid(img);
    const int n = img.side();
    std::vector<double> cur(img.data.size()), next(img.data.size());
    for (int x = 0; x < n; ++x)
        for (int s = 0; s < n; ++s)
            cur[static_cast<std::size_t>(x) * n + s] = img(s, x);

    std::uint64_t additions = 0;
    for (int w = 1; w < n; w *= 2) {
        const int w2 = 2 * w;
        for (int j = 0; j * w2 < n; ++j) {
            for (int tp = 0; tp < w2; ++tp) {
                const int half = tp >> 1;
                const int off = (tp + 1) >> 1;
                const double* left = &cur[(static_cast<std::size_t>(2 * j) * w + half) * n];
                const double* right = &cur[(static_cast<std::size_t>(2 * j + 1) * w + half) * n];
                double* out = &next[(static_cast<std::size_t>(j) * w2 + tp) * n];
                const int split = n - off;
                for (int s = 0; s < split; ++s) out[s] = left[s] + right[s + off];
                for (int s = split; s < n; ++s) out[s] = left[s] + right[s + off - n];
                if constexpr (Count) additions += static_cast<std::uint64_t>(n);
            }
        }
        cur.swap(next);
    }
    if constexpr (Count) count->additions += additions;

    GrayImage out(img.p);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t)
            out(s, t) = cur[static_cast<std::size_t>(t) * n + s];
    return out;
}

} // namespace detail

/// Cyclic fast Hough transform for mostly-horizontal, downward patterns.
/// Output pixel (row s, column t) is the sum of input pixels along the dyadic
/// pattern with start row s and shift t: sum_x I((s + H(x,t)) mod n, x).
inline GrayImage fht_forward(const GrayImage& img) {
    return detail::fht_forward_impl<false>(img, nullptr);
}

/// Same transform, counting every addition the halving scheme performs.
inline GrayImage fht_forward(const GrayImage& img, FhtOpCount& count) {
    return detail::fht_forward_impl<true>(img, &count);
}

/// Exact adjoint of fht_forward: multiplication by the transposed operator
/// matrix, computed as flip_rows . fht_forward . flip_rows.
inline GrayImage fht_transposed(const GrayImage& img) {
    return flip_rows(fht_forward(flip_rows(img)));
}

inline GrayImage fht_transposed(const GrayImage& img, FhtOpCount& count) {
    return flip_rows(fht_forward(flip_rows(img), count));
}

/// Orientation family of the lines a transform integrates along.
/// HorizontalDown is the canonical family handled by fht_forward directly;
/// the others reduce to it by row flips and/or an input transposition.
enum class Quadrant {
    HorizontalDown,
    HorizontalUp,
    VerticalRight,
    VerticalLeft,
};

/// Forward (or transposed) FHT for any quadrant. Vertical quadrants transpose
/// the input image first and leave the output in Hough coordinates; their
/// transposed variants map back into image coordinates, so each transposed
/// routing is the exact adjoint of the matching forward routing.
inline GrayImage fht_quadrant(const GrayImage& img, Quadrant q, bool transposed) {
    switch (q) {
    case Quadrant::HorizontalDown:
        return transposed ? fht_transposed(img) : fht_forward(img);
    case Quadrant::HorizontalUp:
        // flip . forward . flip; its adjoint collapses to the plain forward pass
        return transposed ? fht_forward(img) : flip_rows(fht_forward(flip_rows(img)));
    case Quadrant::VerticalRight:
        return transposed ? transpose_image(fht_transposed(img))
                          : fht_forward(transpose_image(img));
    case Quadrant::VerticalLeft:
        return transposed ? transpose_image(fht_forward(img))
                          : flip_rows(fht_forward(flip_rows(transpose_image(img))));
    }
    throw ArgumentError("fht_quadrant: unknown quadrant");
}

} // namespace fhtnet
