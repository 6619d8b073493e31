#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fhtnet/core.hpp"
#include "fhtnet/errors.hpp"

namespace fhtnet {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Line a*x + b*y = c.
struct LineParams {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

} // namespace fhtnet

// Brute-force reference implementations. Everything here favors obviousness
// over speed and exists to cross-check the fast paths.
namespace fhtnet::oracle {

/// Explicit 0/1 operator matrix of the forward transform, stored as positions
/// of ones. Row m = s*n + t (pattern), column q = y*n + x (pixel).
struct SparseBinaryMatrix {
    int n2 = 1;
    std::vector<std::pair<int, int>> entries;
};

inline SparseBinaryMatrix build_fht_matrix(int p) {
    if (p < 0) throw ArgumentError("build_fht_matrix: negative exponent");
    if (p > 6) throw ResourceError("build_fht_matrix: exponent above 6 refused (n^3 entry guard)");
    const int n = 1 << p;
    SparseBinaryMatrix m;
    m.n2 = n * n;
    m.entries.reserve(static_cast<std::size_t>(n) * n * n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) {
            const int row = s * n + t;
            for (const auto& cell : pattern({t, s}, p))
                m.entries.emplace_back(row, cell.y * n + cell.x);
        }
    return m;
}

inline std::vector<double> apply(const SparseBinaryMatrix& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.n2)
        throw ArgumentError("oracle::apply: vector length does not match matrix side");
    std::vector<double> out(x.size(), 0.0);
    for (const auto& [row, col] : m.entries) out[row] += x[col];
    return out;
}

inline std::vector<double> apply_transposed(const SparseBinaryMatrix& m,
                                            const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.n2)
        throw ArgumentError("oracle::apply_transposed: vector length does not match matrix side");
    std::vector<double> out(x.size(), 0.0);
    for (const auto& [row, col] : m.entries) out[col] += x[row];
    return out;
}

inline GrayImage apply(const SparseBinaryMatrix& m, const GrayImage& img) {
    require_valid(img);
    GrayImage out(img.p);
    out.data = apply(m, img.data);
    return out;
}

inline GrayImage apply_transposed(const SparseBinaryMatrix& m, const GrayImage& img) {
    require_valid(img);
    GrayImage out(img.p);
    out.data = apply_transposed(m, img.data);
    return out;
}

/// Dense 0/1 view of the operator matrix; side n^2. Small p only.
struct DenseBinaryMatrix {
    int n = 1; // image side; the matrix is (n^2) x (n^2)
    std::vector<std::uint8_t> bits;

    std::uint8_t at(int row, int col) const {
        return bits[static_cast<std::size_t>(row) * n * n + col];
    }
    std::uint8_t& at(int row, int col) {
        return bits[static_cast<std::size_t>(row) * n * n + col];
    }
};

inline DenseBinaryMatrix to_dense(const SparseBinaryMatrix& m, int n) {
    if (n * n != m.n2) throw ArgumentError("to_dense: side mismatch");
    DenseBinaryMatrix d;
    d.n = n;
    d.bits.assign(static_cast<std::size_t>(m.n2) * m.n2, 0);
    for (const auto& [row, col] : m.entries) d.at(row, col) = 1;
    return d;
}

// Pixel-index action of the row flip: y*n + x -> (n-1-y)*n + x.
inline int flip_index(int q, int n) { return (n - 1 - q / n) * n + q % n; }

/// The n x n table of pattern offsets is symmetric.
inline bool check_indentation_symmetry(int p) {
    const int n = 1 << p;
    for (int x = 0; x < n; ++x)
        for (int t = 0; t < n; ++t)
            if (indentation(x, t, p) != indentation(t, x, p)) return false;
    return true;
}

/// Every n x n block of the operator matrix is symmetric.
inline bool check_block_symmetry(const DenseBinaryMatrix& d) {
    const int n = d.n;
    for (int bi = 0; bi < n; ++bi)
        for (int bj = 0; bj < n; ++bj)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < k; ++l)
                    if (d.at(bi * n + k, bj * n + l) != d.at(bi * n + l, bj * n + k))
                        return false;
    return true;
}

/// Blocks along each cyclic block-diagonal coincide.
inline bool check_block_diagonals(const DenseBinaryMatrix& d) {
    const int n = d.n;
    for (int bi = 0; bi < n; ++bi)
        for (int bj = 0; bj < n; ++bj)
            for (int k = 1; k < n; ++k) {
                const int bi2 = (bi + k) % n;
                const int bj2 = (bj + k) % n;
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        if (d.at(bi * n + r, bj * n + c) != d.at(bi2 * n + r, bj2 * n + c))
                            return false;
            }
    return true;
}

/// The matrix times the row-flip permutation is symmetric.
inline bool check_flip_product_symmetry(const DenseBinaryMatrix& d) {
    const int n = d.n;
    const int n2 = n * n;
    for (int m = 0; m < n2; ++m)
        for (int q = 0; q < m; ++q)
            if (d.at(m, flip_index(q, n)) != d.at(q, flip_index(m, n))) return false;
    return true;
}

/// Conjugating by the row flip transposes the matrix: C*A*C == A^T.
inline bool check_transpose_identity(const DenseBinaryMatrix& d) {
    const int n = d.n;
    const int n2 = n * n;
    for (int m = 0; m < n2; ++m)
        for (int q = 0; q < n2; ++q)
            if (d.at(flip_index(m, n), flip_index(q, n)) != d.at(q, m)) return false;
    return true;
}

/// Machine-checked statements the transpose trick rests on, by explicit matrix
/// manipulation of build_fht_matrix(p).
struct LemmaReport {
    bool indentation_symmetric = false;     // L1
    bool blocks_symmetric = false;          // L2
    bool block_diagonals_constant = false;  // L3
    bool flip_product_symmetric = false;    // L4
    bool transpose_identity = false;        // T1

    bool all_ok() const {
        return indentation_symmetric && blocks_symmetric && block_diagonals_constant &&
               flip_product_symmetric && transpose_identity;
    }
};

/// Labels in check order, for report printing.
inline const char* lemma_label(int i) {
    static const char* names[5] = {"L1 indentation-symmetry", "L2 block-symmetry",
                                   "L3 block-diagonals", "L4 flip-product-symmetry",
                                   "T1 transpose-identity"};
    return names[i];
}

inline LemmaReport verify_lemmas(int p) {
    if (p < 0) throw ArgumentError("verify_lemmas: negative exponent");
    if (p > 5) throw ResourceError("verify_lemmas: exponent above 5 refused (dense n^4 guard)");
    const int n = 1 << p;
    const DenseBinaryMatrix d = to_dense(build_fht_matrix(p), n);
    LemmaReport r;
    r.indentation_symmetric = check_indentation_symmetry(p);
    r.blocks_symmetric = check_block_symmetry(d);
    r.block_diagonals_constant = check_block_diagonals(d);
    r.flip_product_symmetric = check_flip_product_symmetry(d);
    r.transpose_identity = check_transpose_identity(d);
    return r;
}

/// (s, alpha) accumulator of the classical O(n^3) transform. alpha_j = j*alpha_step
/// over [0, pi); s_i = s_min + i*s_step over [-n*sqrt(2)/2, n*sqrt(2)/2], with
/// pixel coordinates centered on the image.
struct HoughAccumulator {
    int s_bins = 0;
    int alpha_bins = 0;
    std::vector<double> data; // row-major, s index major
    double s_min = 0.0;
    double s_step = 0.0;
    double alpha_step = 0.0;

    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * alpha_bins + j]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * alpha_bins + j]; }
};

inline HoughAccumulator classical_hough(const GrayImage& img, int s_samples, int alpha_samples) {
    require_valid(img);
    if (s_samples < 1 || alpha_samples < 1)
        throw ArgumentError("classical_hough: sample counts must be positive");
    const int n = img.side();
    const double half = (n - 1) / 2.0;
    const double s_span = n * std::sqrt(2.0) / 2.0;

    HoughAccumulator acc;
    acc.s_bins = s_samples;
    acc.alpha_bins = alpha_samples;
    acc.data.assign(static_cast<std::size_t>(s_samples) * alpha_samples, 0.0);
    acc.s_min = -s_span;
    acc.s_step = s_samples > 1 ? 2.0 * s_span / (s_samples - 1) : 0.0;
    acc.alpha_step = M_PI / alpha_samples;

    for (int i = 0; i < s_samples; ++i) {
        const double s = acc.s_min + i * acc.s_step;
        for (int j = 0; j < alpha_samples; ++j) {
            const double alpha = j * acc.alpha_step;
            const double ca = std::cos(alpha), sa = std::sin(alpha);
            double total = 0.0;
            if (std::abs(sa) >= std::abs(ca)) {
                for (int x = 0; x < n; ++x) {
                    const double cy = (s - (x - half) * ca) / sa;
                    const int y = static_cast<int>(std::lround(cy + half));
                    if (y >= 0 && y < n) total += img(y, x);
                }
            } else {
                for (int y = 0; y < n; ++y) {
                    const double cx = (s - (y - half) * sa) / ca;
                    const int x = static_cast<int>(std::lround(cx + half));
                    if (x >= 0 && x < n) total += img(y, x);
                }
            }
            acc.at(i, j) = total;
        }
    }
    return acc;
}

/// Least-squares solution of { a_i x + b_i y = c_i } via the 2x2 normal equations.
inline Point ls_intersection(const std::vector<LineParams>& lines) {
    if (lines.size() < 2) throw ArgumentError("ls_intersection: need at least 2 lines");
    double maa = 0.0, mab = 0.0, mbb = 0.0, va = 0.0, vb = 0.0;
    for (const auto& l : lines) {
        if (l.a == 0.0 && l.b == 0.0)
            throw ArgumentError("ls_intersection: line with zero normal vector");
        maa += l.a * l.a;
        mab += l.a * l.b;
        mbb += l.b * l.b;
        va += l.a * l.c;
        vb += l.b * l.c;
    }
    const double det = maa * mbb - mab * mab;
    const double scale = maa + mbb;
    if (!(det > 1e-12 * scale * scale))
        throw DegenerateInputError("ls_intersection: normal matrix is singular (parallel lines)");
    return {(mbb * va - mab * vb) / det, (maa * vb - mab * va) / det};
}

} // namespace fhtnet::oracle
