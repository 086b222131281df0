#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <set>
#include <vector>

#include "encpipe/error.hpp"
#include "encpipe/regress.hpp"
#include "encpipe/rng.hpp"

using namespace encpipe;

namespace {

TimeSeriesMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    TimeSeriesMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = scale * rng.next_normal();
    return m;
}

// Straightforward shift with zero padding, for checking make_lagged.
TimeSeriesMatrix naive_lagged(const TimeSeriesMatrix& m, const DelaySpec& delays) {
    const std::size_t t = m.rows(), d = m.cols();
    TimeSeriesMatrix out(t, d * delays.size());
    for (std::size_t k = 0; k < delays.size(); ++k) {
        const int delay = delays[k];
        for (std::size_t row = 0; row < t; ++row) {
            const long src = long(row) - delay;
            for (std::size_t c = 0; c < d; ++c)
                out(row, k * d + c) = (src >= 0 && src < long(t)) ? m(std::size_t(src), c) : 0.0;
        }
    }
    return out;
}

// Dense solve of (X'X + lambda I) W = X'Y by Gauss-Jordan, as an independent
// check on the eigendecomposition route.
TimeSeriesMatrix normal_equation_ridge(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y,
                                       double lambda) {
    const std::size_t d = x.cols(), q = y.cols();
    std::vector<std::vector<double>> a(d, std::vector<double>(d + q, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * x(r, j);
            a[i][j] = s;
        }
        a[i][i] += lambda;
        for (std::size_t j = 0; j < q; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * y(r, j);
            a[i][d + j] = s;
        }
    }
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        const double diag = a[col][col];
        REQUIRE(std::abs(diag) > 1e-12);
        for (auto& v : a[col]) v /= diag;
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < d + q; ++c) a[r][c] -= f * a[col][c];
        }
    }
    TimeSeriesMatrix w(d, q);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < q; ++j) w(i, j) = a[i][d + j];
    return w;
}

double frob_norm(const TimeSeriesMatrix& m) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * m(r, c);
    return std::sqrt(s);
}

double max_abs_diff(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c) - b(r, c)));
    return m;
}

// Features with staggered small column scales: eigenvalue spread without a
// huge leading mode, so CV score differences between adjacent grid points
// stay above fold-to-fold spread.
TimeSeriesMatrix scaled_features(Rng& rng, std::size_t rows, std::size_t cols) {
    TimeSeriesMatrix x(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) x(r, c) = 0.02 * double(c + 1) * rng.next_normal();
    return x;
}

} // namespace

TEST_CASE("make_lagged shifts with zero padding") {
    auto m = TimeSeriesMatrix::from_data(5, 1, {1, 2, 3, 4, 5});
    auto lag1 = make_lagged(m, DelaySpec{1});
    const std::vector<double> want1{0, 1, 2, 3, 4};
    for (std::size_t r = 0; r < 5; ++r) CHECK(lag1.matrix(r, 0) == want1[r]);
    CHECK(lag1.source_dims == 1);
    CHECK(lag1.matrix.cols() == 1);

    auto lag0 = make_lagged(m, DelaySpec{0});
    for (std::size_t r = 0; r < 5; ++r) CHECK(lag0.matrix(r, 0) == m(r, 0));

    auto m3 = TimeSeriesMatrix::from_data(3, 1, {1, 2, 3});
    auto future = make_lagged(m3, DelaySpec{-1});
    CHECK(future.matrix(0, 0) == 2);
    CHECK(future.matrix(1, 0) == 3);
    CHECK(future.matrix(2, 0) == 0);
}

TEST_CASE("make_lagged block layout matches the naive shift") {
    Rng rng(101);
    auto m = random_matrix(rng, 50, 3);
    const std::vector<DelaySpec> sets{DelaySpec{3, 4, 5, 6}, DelaySpec{-5, -4, -3},
                                      DelaySpec{-2, 0, 1, 6}, DelaySpec{-5, 6}, DelaySpec{2}};
    for (const auto& delays : sets) {
        auto got = make_lagged(m, delays);
        auto want = naive_lagged(m, delays);
        CHECK(got.matrix.rows() == want.rows());
        CHECK(max_abs_diff(got.matrix, want) == 0.0);
    }
}

TEST_CASE("make_lagged composes shifts on the overlap") {
    Rng rng(102);
    auto m = random_matrix(rng, 30, 2);
    const int a = 2, b = 3;
    auto inner = make_lagged(m, DelaySpec{b}).matrix;
    auto outer = make_lagged(inner, DelaySpec{a}).matrix;
    auto direct = make_lagged(m, DelaySpec{a + b}).matrix;
    for (std::size_t row = 0; row < 30; ++row) {
        const long src = long(row) - (a + b);
        if (src < 0 || src >= 30) continue;
        for (std::size_t c = 0; c < 2; ++c) CHECK(outer(row, c) == direct(row, c));
    }
}

TEST_CASE("pca recovers the diagonal line") {
    auto m = TimeSeriesMatrix::from_data(4, 2, {1, 1, 2, 2, 3, 3, -1, -1});
    auto p = fit_pca(m, 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(p.components(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(p.components(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    // the single component carries all the variance
    double total = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < 4; ++r) mean += m(r, c);
        mean /= 4.0;
        for (std::size_t r = 0; r < 4; ++r) total += (m(r, c) - mean) * (m(r, c) - mean);
    }
    total /= 4.0;
    CHECK(p.explained_variance[0] == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("pca projection oracle at (2,2)") {
    auto m = TimeSeriesMatrix::from_data(4, 2, {1, 1, -1, -1, 2, 2, -2, -2}); // mean (0,0)
    auto p = fit_pca(m, 1);
    CHECK(std::abs(p.means[0]) < 1e-15);
    CHECK(std::abs(p.means[1]) < 1e-15);
    auto z = apply_pca(TimeSeriesMatrix::from_data(1, 2, {2, 2}), p);
    CHECK(z(0, 0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

    auto zero = apply_pca(TimeSeriesMatrix::from_data(1, 2, {0, 0}), p);
    CHECK(std::abs(zero(0, 0)) < 1e-12);

    CHECK_THROWS_AS(apply_pca(TimeSeriesMatrix::from_data(1, 3, {1, 2, 3}), p), DataError);
}

TEST_CASE("pca full rank reconstructs exactly") {
    Rng rng(7);
    for (const auto& [t, d] : {std::pair<std::size_t, std::size_t>{20, 6}, {5, 9}}) {
        auto m = random_matrix(rng, t, d);
        const std::size_t k = std::min(t, d);
        auto p = fit_pca(m, k);

        // orthonormal rows
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += p.components(i, c) * p.components(j, c);
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
            }

        // sign convention: each component's largest coefficient is positive
        for (std::size_t i = 0; i < k; ++i) {
            double best = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                if (std::abs(p.components(i, c)) > std::abs(best)) best = p.components(i, c);
            CHECK(best >= 0.0);
        }

        // non-increasing variances summing to the total column variance
        double ev_total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (i > 0) CHECK(p.explained_variance[i] <= p.explained_variance[i - 1] + 1e-12);
            CHECK(p.explained_variance[i] >= -1e-12);
            ev_total += p.explained_variance[i];
        }
        double col_total = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < t; ++r) mean += m(r, c);
            mean /= double(t);
            for (std::size_t r = 0; r < t; ++r)
                col_total += (m(r, c) - mean) * (m(r, c) - mean) / double(t);
        }
        CHECK(ev_total == doctest::Approx(col_total).epsilon(1e-9));

        // round trip through the scores
        auto z = apply_pca(m, p);
        TimeSeriesMatrix back(t, d);
        for (std::size_t r = 0; r < t; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                double s = p.means[c];
                for (std::size_t i = 0; i < k; ++i) s += z(r, i) * p.components(i, c);
                back(r, c) = s;
            }
        CHECK(max_abs_diff(back, m) < 1e-9);
    }

    auto m = random_matrix(rng, 6, 3);
    CHECK_THROWS_AS(fit_pca(m, 4), DataError);
}

TEST_CASE("ridge identity and closed-form oracles") {
    auto eye = TimeSeriesMatrix::from_data(2, 2, {1, 0, 0, 1});
    auto w0 = fit_ridge(eye, eye, 0.0);
    CHECK(max_abs_diff(w0.weights, eye) < 1e-12);
    CHECK_FALSE(w0.min_norm);

    auto x = TimeSeriesMatrix::from_data(3, 1, {1, 2, 3});
    auto y = TimeSeriesMatrix::from_data(3, 1, {2, 4, 6});
    auto w = fit_ridge(x, y, 1.0);
    CHECK(w.weights(0, 0) == doctest::Approx(28.0 / 15.0).epsilon(1e-12));

    auto pred = predict(w, TimeSeriesMatrix::from_data(1, 1, {2}));
    CHECK(pred(0, 0) == doctest::Approx(2.0 * 28.0 / 15.0).epsilon(1e-12));

    auto crushed = fit_ridge(x, y, 1e12);
    CHECK(frob_norm(crushed.weights) < 1e-6);

    CHECK_THROWS_AS(predict(w, TimeSeriesMatrix::from_data(1, 2, {1, 2})), DataError);
}

TEST_CASE("ridge matches the normal equations, tall and wide") {
    Rng rng(55);
    for (int rep = 0; rep < 8; ++rep) {
        const std::size_t t = 12 + rng.next_index(30);
        const std::size_t d = 2 + rng.next_index(8);
        const std::size_t q = 1 + rng.next_index(3);
        auto x = random_matrix(rng, t, d);
        auto y = random_matrix(rng, t, q);
        for (const double lambda : {1e-3, 0.7, 50.0}) {
            auto got = fit_ridge(x, y, lambda);
            auto want = normal_equation_ridge(x, y, lambda);
            double diff = 0.0, denom = frob_norm(want);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < q; ++j) {
                    const double e = got.weights(i, j) - want(i, j);
                    diff += e * e;
                }
            CHECK(std::sqrt(diff) <= 1e-8 * std::max(denom, 1.0));
        }
    }

    // wide design: same normal equations hold once lambda > 0
    auto x = random_matrix(rng, 5, 12);
    auto y = random_matrix(rng, 5, 2);
    auto got = fit_ridge(x, y, 1e-2);
    auto want = normal_equation_ridge(x, y, 1e-2);
    CHECK(max_abs_diff(got.weights, want) < 1e-8);
}

TEST_CASE("rank-deficient lambda zero returns the flagged minimum-norm fit") {
    auto x = TimeSeriesMatrix::from_data(3, 2, {1, 1, 2, 2, 3, 3});
    auto y = TimeSeriesMatrix::from_data(3, 1, {2, 4, 6});
    auto m = fit_ridge(x, y, 0.0);
    CHECK(m.min_norm);
    CHECK(m.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.weights(1, 0) == doctest::Approx(1.0).epsilon(1e-10));

    // wide at lambda 0: minimum-norm interpolation, X W = Y
    Rng rng(77);
    auto xw = random_matrix(rng, 4, 9);
    auto yw = random_matrix(rng, 4, 2);
    auto mw = fit_ridge(xw, yw, 0.0);
    CHECK(mw.min_norm);
    auto fitted = predict(mw, xw);
    CHECK(max_abs_diff(fitted, yw) < 1e-8);
}

TEST_CASE("ridge norm shrinks monotonically in lambda") {
    Rng rng(91);
    auto x = random_matrix(rng, 40, 6);
    auto y = random_matrix(rng, 40, 3);
    RidgeSolver solver(x, y);
    double prev = -1.0;
    for (const double lambda : default_lambda_grid()) {
        const double norm = frob_norm(solver.solve(lambda));
        if (prev >= 0.0) CHECK(norm <= prev + 1e-12);
        prev = norm;
    }
}

TEST_CASE("contiguous folds are balanced blocks") {
    auto plan = FoldPlan::contiguous(10, 3);
    CHECK(plan.n_folds == 3);
    REQUIRE(plan.assignment.size() == 10);
    for (std::size_t i = 1; i < 10; ++i) CHECK(plan.assignment[i] >= plan.assignment[i - 1]);
    CHECK(plan.fold_rows(0) == std::vector<std::size_t>{0, 1, 2});
    CHECK(plan.fold_rows(1) == std::vector<std::size_t>{3, 4, 5});
    CHECK(plan.fold_rows(2) == std::vector<std::size_t>{6, 7, 8, 9});
    CHECK(plan.train_rows(1) == std::vector<std::size_t>{0, 1, 2, 6, 7, 8, 9});

    CHECK_THROWS_AS(FoldPlan::contiguous(10, 1), DataError);
    CHECK_THROWS_AS(FoldPlan::contiguous(2, 3), DataError);
}

TEST_CASE("clip folds never split a clip") {
    std::vector<ClipSpan> spans{{"a", 0, 5}, {"b", 5, 1}, {"c", 6, 1},
                                {"d", 7, 1}, {"e", 8, 4}, {"f", 12, 4}};
    ClipIndex idx(spans);
    auto plan = FoldPlan::by_clips(idx, 3);
    REQUIRE(plan.assignment.size() == 16);
    for (const auto& span : spans) {
        const std::size_t fold = plan.assignment[span.start];
        for (std::size_t r = span.start; r < span.start + span.length; ++r)
            CHECK(plan.assignment[r] == fold);
    }
    std::set<std::size_t> seen(plan.assignment.begin(), plan.assignment.end());
    CHECK(seen.size() == 3);

    ClipIndex two({{"a", 0, 4}, {"b", 4, 4}});
    CHECK_THROWS_AS(FoldPlan::by_clips(two, 3), DataError);
}

TEST_CASE("default lambda grid spans 1e-4 to 1e4") {
    auto grid = default_lambda_grid();
    REQUIRE(grid.size() == 17);
    CHECK(grid.front() == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(1e4).epsilon(1e-12));
    const double step = std::sqrt(10.0);
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] / grid[i - 1] == doctest::Approx(step).epsilon(1e-9));
}

TEST_CASE("cv picks the smallest lambda on noiseless data") {
    Rng rng(13);
    const std::size_t t = 200, d = 5;
    auto x = scaled_features(rng, t, d);
    auto w0 = random_matrix(rng, d, 2);
    TimeSeriesMatrix y(t, 2);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += x(r, c) * w0(c, j);
            y(r, j) = s;
        }
    auto folds = FoldPlan::contiguous(t, 10);
    auto grid = default_lambda_grid();
    auto sel = cv_select_lambda(x, y, grid, folds, LambdaMode::shared);
    REQUIRE(sel.lambdas.size() == 1);
    CHECK(sel.lambdas[0] == grid.front());
    for (const double r : sel.cv_scores) CHECK(r > 0.999);
}

TEST_CASE("cv maxes out lambda on a pure noise target") {
    // with one feature every lambda rescales the same prediction, so fold
    // scores tie exactly and the tie rule must walk to the top of the grid
    Rng rng(29);
    auto x = random_matrix(rng, 400, 1);
    auto y = random_matrix(rng, 400, 1);
    auto folds = FoldPlan::contiguous(400, 10);
    auto grid = default_lambda_grid();
    auto sel = cv_select_lambda(x, y, grid, folds, LambdaMode::shared);
    CHECK(sel.lambdas[0] == grid.back());
    CHECK(std::abs(sel.cv_scores[0]) < 0.15);

    // several noise targets against the same single feature tie the same way
    auto x1 = random_matrix(rng, 1000, 1);
    auto y3 = random_matrix(rng, 1000, 3);
    auto sel3 = cv_select_lambda(x1, y3, default_lambda_grid(),
                                 FoldPlan::contiguous(1000, 10), LambdaMode::shared);
    CHECK(sel3.lambdas[0] == grid.back());
    for (const double r : sel3.cv_scores) CHECK(std::abs(r) < 0.1);
}

TEST_CASE("per-target cv separates clean from noisy targets") {
    Rng rng(41);
    const std::size_t t = 300, d = 5;
    auto x = scaled_features(rng, t, d);
    TimeSeriesMatrix y(t, 2);
    for (std::size_t r = 0; r < t; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += x(r, c);
        y(r, 0) = s;                // clean linear target
        y(r, 1) = rng.next_normal(); // unrelated noise
    }
    auto folds = FoldPlan::contiguous(t, 10);
    auto sel = cv_select_lambda(x, y, default_lambda_grid(), folds, LambdaMode::per_target);
    REQUIRE(sel.lambdas.size() == 2);
    CHECK(sel.lambdas[0] <= sel.lambdas[1]);
    CHECK(sel.cv_scores[0] > 0.999);
    CHECK(std::abs(sel.cv_scores[1]) < 0.3);
}

TEST_CASE("cv rejects folds too small to score") {
    Rng rng(43);
    auto x = random_matrix(rng, 5, 2);
    auto y = random_matrix(rng, 5, 1);
    auto plan = FoldPlan::contiguous(5, 4); // leading folds hold one row each
    CHECK_THROWS_AS(cv_select_lambda(x, y, default_lambda_grid(), plan, LambdaMode::shared),
                    DataError);
}

TEST_CASE("fit_ridge_cv refits on all rows at the selection") {
    Rng rng(59);
    const std::size_t t = 120, d = 4;
    auto x = scaled_features(rng, t, d);
    TimeSeriesMatrix y(t, 2);
    for (std::size_t r = 0; r < t; ++r) {
        y(r, 0) = x(r, 0) + 2.0 * x(r, 2);
        y(r, 1) = rng.next_normal();
    }
    auto folds = FoldPlan::contiguous(t, 10);
    auto grid = default_lambda_grid();

    auto shared = fit_ridge_cv(x, y, grid, folds, LambdaMode::shared);
    REQUIRE(shared.lambdas.size() == 1);
    REQUIRE(shared.cv_scores.size() == 2);
    auto direct = fit_ridge(x, y, shared.lambdas[0]);
    CHECK(max_abs_diff(shared.weights, direct.weights) < 1e-12);

    auto per = fit_ridge_cv(x, y, grid, folds, LambdaMode::per_target);
    REQUIRE(per.lambdas.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        auto one = fit_ridge(x, y, per.lambdas[j]);
        for (std::size_t i = 0; i < d; ++i)
            CHECK(std::abs(per.weights(i, j) - one.weights(i, j)) < 1e-12);
    }
}
