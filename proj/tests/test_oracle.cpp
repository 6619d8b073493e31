#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fhtnet/oracle.hpp"
#include "test_util.hpp"

using namespace fhtnet;
using oracle::build_fht_matrix;
using oracle::verify_lemmas;
using testutil::random_int_image;

TEST_CASE("operator matrix for the smallest sides") {
    const auto m0 = build_fht_matrix(0);
    REQUIRE(m0.n2 == 1);
    REQUIRE(m0.entries == std::vector<std::pair<int, int>>{{0, 0}});

    const auto m1 = build_fht_matrix(1);
    REQUIRE(m1.n2 == 4);
    // pattern (s=0, t=0) is the top row: pixels (0,0) and (0,1)
    std::vector<int> row0_cols;
    for (const auto& [row, col] : m1.entries)
        if (row == 0) row0_cols.push_back(col);
    std::sort(row0_cols.begin(), row0_cols.end());
    REQUIRE(row0_cols == std::vector<int>{0, 1});

    CHECK_THROWS_AS(build_fht_matrix(7), ResourceError);
    CHECK_THROWS_AS(build_fht_matrix(-1), ArgumentError);
}

TEST_CASE("operator matrix rows and columns each hold exactly n ones") {
    for (int p = 0; p <= 5; ++p) {
        const int n = 1 << p;
        const auto m = build_fht_matrix(p);
        std::vector<int> row_sum(m.n2, 0), col_sum(m.n2, 0);
        for (const auto& [row, col] : m.entries) {
            ++row_sum[row];
            ++col_sum[col];
        }
        REQUIRE(std::all_of(row_sum.begin(), row_sum.end(), [n](int v) { return v == n; }));
        REQUIRE(std::all_of(col_sum.begin(), col_sum.end(), [n](int v) { return v == n; }));
    }
}

TEST_CASE("fast transform agrees with the explicit matrix on random images") {
    std::mt19937_64 rng(777);
    for (int p : {1, 2, 3, 4}) {
        const auto m = build_fht_matrix(p);
        for (int rep = 0; rep < 20; ++rep) {
            const GrayImage img = random_int_image(p, rng);
            REQUIRE(fht_forward(img) == oracle::apply(m, img));
            REQUIRE(fht_transposed(img) == oracle::apply_transposed(m, img));
        }
    }
}

TEST_CASE("lemma suite passes for p = 1..5") {
    for (int p = 1; p <= 5; ++p) {
        const auto report = verify_lemmas(p);
        INFO("p = " << p);
        CHECK(report.indentation_symmetric);
        CHECK(report.blocks_symmetric);
        CHECK(report.block_diagonals_constant);
        CHECK(report.flip_product_symmetric);
        CHECK(report.transpose_identity);
        REQUIRE(report.all_ok());
    }
    CHECK_THROWS_AS(verify_lemmas(6), ResourceError);
}

TEST_CASE("a single flipped bit breaks the transpose identity check") {
    const int p = 2, n = 4;
    auto dense = oracle::to_dense(build_fht_matrix(p), n);
    REQUIRE(oracle::check_transpose_identity(dense));
    dense.at(3, 5) ^= 1;
    REQUIRE_FALSE(oracle::check_transpose_identity(dense));
}

TEST_CASE("classical transform on an all-zero image") {
    GrayImage img(4);
    const auto acc = oracle::classical_hough(img, 32, 32);
    for (double v : acc.data) REQUIRE(v == 0.0);
}

TEST_CASE("classical transform peaks at the bin of a horizontal row") {
    const int n = 16;
    GrayImage img(4);
    const int y0 = 11;
    for (int x = 0; x < n; ++x) img(y0, x) = 1.0;

    const auto acc = oracle::classical_hough(img, 65, 64);
    int best_i = 0, best_j = 0;
    double best = -1.0;
    for (int i = 0; i < acc.s_bins; ++i)
        for (int j = 0; j < acc.alpha_bins; ++j)
            if (acc.at(i, j) > best) {
                best = acc.at(i, j);
                best_i = i;
                best_j = j;
            }
    REQUIRE(best == Catch::Approx(16.0)); // the whole row is collected

    const double alpha = best_j * acc.alpha_step;
    REQUIRE(std::abs(alpha - M_PI / 2) <= acc.alpha_step);
    const double s = acc.s_min + best_i * acc.s_step;
    const double expected_s = y0 - (n - 1) / 2.0; // centered row coordinate
    REQUIRE(std::abs(s - expected_s) <= acc.s_step);
}

TEST_CASE("classical transform on all-ones counts rasterized pixels per bin") {
    const int n = 8;
    GrayImage img(3);
    for (auto& v : img.data) v = 1.0;
    const auto acc = oracle::classical_hough(img, 23, 17);

    const double half = (n - 1) / 2.0;
    for (int i = 0; i < acc.s_bins; ++i)
        for (int j = 0; j < acc.alpha_bins; ++j) {
            const double s = acc.s_min + i * acc.s_step;
            const double alpha = j * acc.alpha_step;
            const double ca = std::cos(alpha), sa = std::sin(alpha);
            int count = 0;
            if (std::abs(sa) >= std::abs(ca)) {
                for (int x = 0; x < n; ++x) {
                    const int y = static_cast<int>(std::lround((s - (x - half) * ca) / sa + half));
                    if (y >= 0 && y < n) ++count;
                }
            } else {
                for (int y = 0; y < n; ++y) {
                    const int x = static_cast<int>(std::lround((s - (y - half) * sa) / ca + half));
                    if (x >= 0 && x < n) ++count;
                }
            }
            REQUIRE(acc.at(i, j) == static_cast<double>(count));
        }
}

TEST_CASE("classical and fast transforms locate the same single-line maximum") {
    for (int p : {4, 5}) {
        const int n = 1 << p;
        for (int t_true : {2, n / 3, n - 3}) {
            const int s_true = (n - 1 - t_true) / 2; // keep the whole line inside the frame
            const double slope = static_cast<double>(t_true) / (n - 1);
            GrayImage img(p);
            bool in_bounds = true;
            for (int x = 0; x < n; ++x) {
                const int y = static_cast<int>(std::lround(s_true + slope * x));
                if (y < 0 || y >= n) in_bounds = false;
            }
            REQUIRE(in_bounds);
            for (int x = 0; x < n; ++x)
                img(static_cast<int>(std::lround(s_true + slope * x)), x) = 1.0;

            const GrayImage fast = fht_forward(img);
            int sf = 0, tf = 0;
            double best = -1.0;
            for (int s = 0; s < n; ++s)
                for (int t = 0; t < n; ++t)
                    if (fast(s, t) > best) {
                        best = fast(s, t);
                        sf = s;
                        tf = t;
                    }

            const auto acc = oracle::classical_hough(img, 8 * n + 1, 512);
            int bi = 0, bj = 0;
            double cbest = -1.0;
            for (int i = 0; i < acc.s_bins; ++i)
                for (int j = 0; j < acc.alpha_bins; ++j)
                    if (acc.at(i, j) > cbest) {
                        cbest = acc.at(i, j);
                        bi = i;
                        bj = j;
                    }
            const double alpha = bj * acc.alpha_step;
            const double s_val = acc.s_min + bi * acc.s_step;
            const double half = (n - 1) / 2.0;
            const double m_c = -std::cos(alpha) / std::sin(alpha);
            const double y0_c = half + (s_val + half * std::cos(alpha)) / std::sin(alpha);

            INFO("n=" << n << " t_true=" << t_true << " fht=(" << sf << "," << tf << ") classical slope "
                      << m_c << " intercept " << y0_c);
            REQUIRE(std::abs(y0_c - sf) <= 1.5);
            REQUIRE(std::abs(m_c * (n - 1) - tf) <= 1.5);
        }
    }
}

TEST_CASE("least-squares intersection") {
    using oracle::ls_intersection;
    const Point axes = ls_intersection({{1, 0, 0}, {0, 1, 0}});
    CHECK(axes.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(axes.y == Catch::Approx(0.0).margin(1e-15));

    // x - y = 0, x + y = 0, y = 1 -> normal equations [[2,0],[0,3]] u = [0,1]
    const Point p = ls_intersection({{1, -1, 0}, {1, 1, 0}, {0, 1, 1}});
    CHECK(p.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(p.y == Catch::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(ls_intersection({{0, 1, 0}, {0, 1, 0}}), DegenerateInputError);
    CHECK_THROWS_AS(ls_intersection({{1, 0, 0}}), ArgumentError);
    CHECK_THROWS_AS(ls_intersection({{0, 0, 1}, {1, 0, 0}}), ArgumentError);
}
