#include <doctest.h>

#include <cmath>
#include <vector>

#include "encpipe/linalg.hpp"
#include "encpipe/rng.hpp"

using namespace encpipe;

namespace {

TimeSeriesMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.next_normal();
    return TimeSeriesMatrix::from_data(rows, cols, std::move(v));
}

double max_abs_diff(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

} // namespace

TEST_CASE("matmul on a worked example") {
    auto a = TimeSeriesMatrix::from_data(2, 2, {1, 2, 3, 4});
    auto b = TimeSeriesMatrix::from_data(2, 2, {5, 6, 7, 8});
    auto c = linalg::matmul(a, b);
    CHECK(c(0, 0) == 19.0);
    CHECK(c(0, 1) == 22.0);
    CHECK(c(1, 0) == 43.0);
    CHECK(c(1, 1) == 50.0);
    CHECK_THROWS(linalg::matmul(a, TimeSeriesMatrix(3, 2)));
}

TEST_CASE("product variants agree with the naive definition") {
    Rng rng(42);
    auto a = random_matrix(rng, 13, 7);
    auto b = random_matrix(rng, 13, 5);

    auto tn = linalg::gemm_tn(a, b);
    auto ref = linalg::matmul(linalg::transpose(a), b);
    CHECK(max_abs_diff(tn, ref) < 1e-12);

    auto gc = linalg::gram_cols(a);
    auto gc_ref = linalg::matmul(linalg::transpose(a), a);
    CHECK(max_abs_diff(gc, gc_ref) < 1e-12);
    for (std::size_t i = 0; i < gc.rows(); ++i)
        for (std::size_t j = 0; j < gc.cols(); ++j) CHECK(gc(i, j) == gc(j, i));

    auto gr = linalg::gram_rows(a);
    auto gr_ref = linalg::matmul(a, linalg::transpose(a));
    CHECK(max_abs_diff(gr, gr_ref) < 1e-12);
}

TEST_CASE("sym_eig solves a 2x2 by hand") {
    auto a = TimeSeriesMatrix::from_data(2, 2, {2, 1, 1, 2});
    auto eig = linalg::sym_eig(a);
    CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(inv_sqrt2));
    CHECK(eig.vectors(0, 0) == doctest::Approx(eig.vectors(0, 1)));
    CHECK(eig.vectors(1, 0) == doctest::Approx(-eig.vectors(1, 1)));
}

TEST_CASE("sym_eig handles tiny and diagonal inputs") {
    auto one = linalg::sym_eig(TimeSeriesMatrix::from_data(1, 1, {4.0}));
    CHECK(one.values[0] == 4.0);
    CHECK(one.vectors(0, 0) == 1.0);

    auto d = TimeSeriesMatrix(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 5.0;
    d(2, 2) = 3.0;
    auto eig = linalg::sym_eig(d);
    CHECK(eig.values == std::vector<double>{5.0, 3.0, 1.0});
    CHECK(std::abs(eig.vectors(0, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(eig.vectors(1, 2)) == doctest::Approx(1.0));
    CHECK(std::abs(eig.vectors(2, 0)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
    Rng rng(7);
    for (std::size_t n : {std::size_t{2}, std::size_t{5}, std::size_t{20}, std::size_t{40}}) {
        auto base = random_matrix(rng, n, n);
        TimeSeriesMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (base(i, j) + base(j, i));

        auto eig = linalg::sym_eig(a);

        for (std::size_t i = 1; i < n; ++i) CHECK(eig.values[i - 1] >= eig.values[i]);

        // rows orthonormal
        auto vvt = linalg::gram_rows(eig.vectors);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(std::abs(vvt(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);

        // A v_i = lambda_i v_i
        auto av = linalg::matmul(a, linalg::transpose(eig.vectors));
        double scale = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
        if (scale == 0.0) scale = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < n; ++r)
                CHECK(std::abs(av(r, i) - eig.values[i] * eig.vectors(i, r)) < 1e-9 * scale);
    }
}

TEST_CASE("sym_eig recovers a known low rank spectrum") {
    // A = 6 u u' with unit u: spectrum {6, 0, 0, 0}
    const std::size_t n = 4;
    std::vector<double> u{0.5, 0.5, 0.5, 0.5};
    TimeSeriesMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 6.0 * u[i] * u[j];
    auto eig = linalg::sym_eig(a);
    CHECK(eig.values[0] == doctest::Approx(6.0).epsilon(1e-12));
    for (std::size_t i = 1; i < n; ++i) CHECK(std::abs(eig.values[i]) < 1e-12);
    for (std::size_t j = 0; j < n; ++j)
        CHECK(std::abs(std::abs(eig.vectors(0, j)) - 0.5) < 1e-12);
}
