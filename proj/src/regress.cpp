#include "encpipe/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "encpipe/error.hpp"
#include "encpipe/eval.hpp"
#include "encpipe/kernels.hpp"
#include "encpipe/linalg.hpp"
#include "encpipe/parallel.hpp"

namespace encpipe {

LaggedDesign make_lagged(const TimeSeriesMatrix& m, const DelaySpec& delays) {
    const std::size_t t = m.rows(), d = m.cols(), l = delays.size();
    LaggedDesign out;
    out.source_dims = d;
    out.delays = delays;
    out.matrix = TimeSeriesMatrix(t, d * l);
    parallel_for(t, [&](std::size_t row) {
        double* dst = out.matrix.row(row);
        for (std::size_t k = 0; k < l; ++k) {
            const long long src = static_cast<long long>(row) - delays[k];
            if (src >= 0 && src < static_cast<long long>(t))
                std::copy(m.row(static_cast<std::size_t>(src)),
                          m.row(static_cast<std::size_t>(src)) + d, dst + k * d);
        }
    });
    return out;
}

namespace {

std::vector<double> column_means(const TimeSeriesMatrix& m) {
    const auto& k = kernels::ops();
    std::vector<double> means(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) k.add(means.data(), m.row(r), m.cols());
    k.scale(means.data(), 1.0 / double(m.rows()), m.cols());
    return means;
}

TimeSeriesMatrix center_columns(const TimeSeriesMatrix& m, const std::vector<double>& means) {
    const auto& k = kernels::ops();
    std::vector<double> ones(m.cols(), 1.0);
    TimeSeriesMatrix out(m.rows(), m.cols());
    parallel_for(m.rows(), [&](std::size_t r) {
        k.center_scale(out.row(r), m.row(r), means.data(), ones.data(), m.cols());
    });
    return out;
}

// Largest-magnitude coefficient of each component points positive; first
// occurrence wins on exact magnitude ties.
void fix_component_signs(TimeSeriesMatrix& components) {
    for (std::size_t i = 0; i < components.rows(); ++i) {
        double* row = components.row(i);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < components.cols(); ++j)
            if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
        if (row[arg] < 0.0)
            for (std::size_t j = 0; j < components.cols(); ++j) row[j] = -row[j];
    }
}

// Fills rows [filled, total) with unit vectors orthogonal to everything above
// them, chosen deterministically from the coordinate basis.
void complete_orthonormal(TimeSeriesMatrix& components, std::size_t filled) {
    const auto& k = kernels::ops();
    const std::size_t d = components.cols();
    std::vector<double> cand(d);
    for (std::size_t row = filled; row < components.rows(); ++row) {
        bool placed = false;
        for (std::size_t basis = 0; basis < d && !placed; ++basis) {
            std::fill(cand.begin(), cand.end(), 0.0);
            cand[basis] = 1.0;
            for (std::size_t prev = 0; prev < row; ++prev) {
                const double proj = k.dot(components.row(prev), cand.data(), d);
                k.axpy(cand.data(), -proj, components.row(prev), d);
            }
            const double norm = std::sqrt(k.sumsq(cand.data(), d));
            if (norm > 1e-3) {
                k.scale(cand.data(), 1.0 / norm, d);
                std::copy(cand.begin(), cand.end(), components.row(row));
                placed = true;
            }
        }
        if (!placed) throw NumericError("could not complete an orthonormal component basis");
    }
}

} // namespace

PCAModel fit_pca(const TimeSeriesMatrix& m, std::size_t n_components) {
    const std::size_t t = m.rows(), d = m.cols();
    if (t < 2) throw DataError("fit_pca needs at least 2 rows");
    if (n_components < 1 || n_components > std::min(t, d))
        throw DataError("fit_pca: n_components must be in [1, min(rows, cols)]");

    PCAModel model;
    model.means = column_means(m);
    const auto centered = center_columns(m, model.means);
    model.components = TimeSeriesMatrix(n_components, d);
    model.explained_variance.assign(n_components, 0.0);

    if (d <= t) {
        const auto eig = linalg::sym_eig(linalg::gram_cols(centered));
        for (std::size_t i = 0; i < n_components; ++i) {
            std::copy(eig.vectors.row(i), eig.vectors.row(i) + d, model.components.row(i));
            model.explained_variance[i] = std::max(eig.values[i], 0.0) / double(t);
        }
    } else {
        const auto eig = linalg::sym_eig(linalg::gram_rows(centered));
        const double top = std::max(eig.values[0], 0.0);
        const double tol = 1e-10 * std::max(top, 1.0);
        std::size_t rank_kept = 0;
        while (rank_kept < n_components && eig.values[rank_kept] > tol) ++rank_kept;

        if (rank_kept > 0) {
            TimeSeriesMatrix u_top(rank_kept, t);
            for (std::size_t i = 0; i < rank_kept; ++i)
                std::copy(eig.vectors.row(i), eig.vectors.row(i) + t, u_top.row(i));
            auto ua = linalg::matmul(u_top, centered); // rows: u_i' A = sigma_i v_i'
            const auto& k = kernels::ops();
            for (std::size_t i = 0; i < rank_kept; ++i) {
                k.scale(ua.row(i), 1.0 / std::sqrt(eig.values[i]), d);
                std::copy(ua.row(i), ua.row(i) + d, model.components.row(i));
                model.explained_variance[i] = eig.values[i] / double(t);
            }
        }
        complete_orthonormal(model.components, rank_kept);
    }
    fix_component_signs(model.components);
    return model;
}

TimeSeriesMatrix apply_pca(const TimeSeriesMatrix& m, const PCAModel& p) {
    if (m.cols() != p.dim()) throw DataError("apply_pca: dimensionality mismatch");
    const auto centered = center_columns(m, p.means);
    return linalg::matmul(centered, linalg::transpose(p.components));
}

RidgeSolver::RidgeSolver(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y) {
    if (x.rows() != y.rows()) throw DataError("ridge: design and target row counts differ");
    const std::size_t m = x.rows(), n = x.cols();
    n_features_ = n;
    n_targets_ = y.cols();
    tall_ = m >= n;

    if (tall_) {
        auto eig = linalg::sym_eig(linalg::gram_cols(x));
        eigvals_ = std::move(eig.values);
        basis_ = std::move(eig.vectors);
        coeffs_ = linalg::matmul(basis_, linalg::gemm_tn(x, y));
    } else {
        auto eig = linalg::sym_eig(linalg::gram_rows(x));
        eigvals_ = std::move(eig.values);
        basis_ = linalg::matmul(eig.vectors, x);
        coeffs_ = linalg::matmul(eig.vectors, y);
    }
    for (auto& e : eigvals_) e = std::max(e, 0.0);
    const double top = eigvals_.empty() ? 0.0 : eigvals_.front();
    drop_tol_ = double(std::max(m, n)) * std::numeric_limits<double>::epsilon() * top;
}

TimeSeriesMatrix RidgeSolver::solve(double lambda) const {
    if (lambda < 0.0) throw DataError("ridge: lambda must be >= 0");
    const auto& k = kernels::ops();
    TimeSeriesMatrix scaled = coeffs_;
    for (std::size_t i = 0; i < eigvals_.size(); ++i) {
        double gain;
        if (lambda == 0.0)
            gain = eigvals_[i] > drop_tol_ ? 1.0 / eigvals_[i] : 0.0;
        else
            gain = 1.0 / (eigvals_[i] + lambda);
        k.scale(scaled.row(i), gain, scaled.cols());
    }
    return linalg::gemm_tn(basis_, scaled);
}

bool RidgeSolver::min_norm_at(double lambda) const {
    if (lambda != 0.0) return false;
    if (!tall_) return true; // wide designs always leave a null space
    for (const auto e : eigvals_)
        if (e <= drop_tol_) return true;
    return false;
}

RidgeModel fit_ridge(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y, double lambda) {
    if (lambda < 0.0) throw DataError("fit_ridge: lambda must be >= 0");
    RidgeSolver solver(x, y);
    RidgeModel model;
    model.weights = solver.solve(lambda);
    model.lambdas = {lambda};
    model.min_norm = solver.min_norm_at(lambda);
    return model;
}

TimeSeriesMatrix predict(const RidgeModel& model, const TimeSeriesMatrix& x) {
    if (x.cols() != model.weights.rows())
        throw DataError("predict: design width does not match weight rows");
    return linalg::matmul(x, model.weights);
}

FoldPlan FoldPlan::contiguous(std::size_t n_rows, std::size_t n_folds) {
    if (n_folds < 2) throw DataError("fold plan needs at least 2 folds");
    if (n_rows < n_folds) throw DataError("fold plan: fewer rows than folds");
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.assignment.resize(n_rows);
    for (std::size_t f = 0; f < n_folds; ++f) {
        const std::size_t lo = f * n_rows / n_folds;
        const std::size_t hi = (f + 1) * n_rows / n_folds;
        for (std::size_t r = lo; r < hi; ++r) plan.assignment[r] = f;
    }
    return plan;
}

FoldPlan FoldPlan::by_clips(const ClipIndex& idx, std::size_t n_folds) {
    if (n_folds < 2) throw DataError("fold plan needs at least 2 folds");
    if (idx.n_clips() < n_folds) throw DataError("fold plan: fewer clips than folds");

    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.assignment.resize(idx.total_rows());

    const auto& spans = idx.spans();
    std::size_t clip = 0;
    std::size_t remaining_rows = idx.total_rows();
    for (std::size_t f = 0; f < n_folds; ++f) {
        const std::size_t clips_reserved = n_folds - 1 - f;
        const double target = double(remaining_rows) / double(n_folds - f);
        std::size_t size = 0;
        auto take = [&] {
            for (std::size_t r = 0; r < spans[clip].length; ++r)
                plan.assignment[spans[clip].start + r] = f;
            size += spans[clip].length;
            ++clip;
        };
        take(); // every fold holds at least one clip
        while (spans.size() - clip > clips_reserved) {
            const double len = double(spans[clip].length);
            if (std::abs(double(size) + len - target) < std::abs(double(size) - target)) take();
            else break;
        }
        remaining_rows -= size;
    }
    return plan;
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] == fold) rows.push_back(r);
    return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] != fold) rows.push_back(r);
    return rows;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid(17);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = std::pow(10.0, -4.0 + 0.5 * double(i));
    return grid;
}

namespace {

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DataError("lambda grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= 0.0) throw DataError("lambda grid values must be positive");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw DataError("lambda grid must be strictly ascending");
    }
}

// Argmax over the grid, with ties walking toward the larger lambda so score
// curves that are flat in lambda resolve toward shrinkage.  Ties are judged
// with a tolerance: predictions identical up to scale produce equal r only
// up to rounding, and 1e-9 is far below any real score difference.
constexpr double kScoreTieTol = 1e-9;

std::size_t pick_best(const std::vector<double>& grid_mean) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid_mean.size(); ++g)
        if (grid_mean[g] >= grid_mean[best]) best = g;
    for (std::size_t g = grid_mean.size(); g-- > 0;)
        if (grid_mean[g] >= grid_mean[best] - kScoreTieTol) return g;
    return best;
}

} // namespace

CvSelection cv_select_lambda(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y,
                             const std::vector<double>& grid, const FoldPlan& folds,
                             LambdaMode mode) {
    validate_grid(grid);
    if (x.rows() != y.rows()) throw DataError("cv_select_lambda: row mismatch");
    if (folds.assignment.size() != x.rows())
        throw DataError("cv_select_lambda: fold plan does not cover the rows");

    const std::size_t n_grid = grid.size(), n_folds = folds.n_folds, n_targets = y.cols();

    // scores[g][f][c]
    std::vector<std::vector<std::vector<double>>> scores(
        n_grid, std::vector<std::vector<double>>(n_folds, std::vector<double>(n_targets, 0.0)));

    for (std::size_t f = 0; f < n_folds; ++f) {
        const auto held = folds.fold_rows(f);
        const auto rest = folds.train_rows(f);
        if (held.size() < 2)
            throw DataError("cv_select_lambda: fold " + std::to_string(f) +
                            " has fewer than 2 samples");
        const auto xt = x.take_rows(rest);
        const auto yt = y.take_rows(rest);
        const auto xv = x.take_rows(held);
        const auto yv = y.take_rows(held);

        RidgeSolver solver(xt, yt);
        for (std::size_t g = 0; g < n_grid; ++g) {
            const auto w = solver.solve(grid[g]);
            const auto pred = linalg::matmul(xv, w);
            for (std::size_t c = 0; c < n_targets; ++c) {
                const auto r = pearson(pred.column(c), yv.column(c));
                scores[g][f][c] = r.defined ? r.r : 0.0;
            }
        }
    }

    CvSelection sel;
    sel.cv_scores.assign(n_targets, 0.0);

    if (mode == LambdaMode::shared) {
        std::vector<double> grid_mean(n_grid, 0.0);
        for (std::size_t g = 0; g < n_grid; ++g) {
            for (std::size_t f = 0; f < n_folds; ++f)
                for (std::size_t c = 0; c < n_targets; ++c) grid_mean[g] += scores[g][f][c];
            grid_mean[g] /= double(n_folds * n_targets);
        }
        const std::size_t pick = pick_best(grid_mean);
        sel.lambdas = {grid[pick]};
        for (std::size_t c = 0; c < n_targets; ++c) {
            double acc = 0.0;
            for (std::size_t f = 0; f < n_folds; ++f) acc += scores[pick][f][c];
            sel.cv_scores[c] = acc / double(n_folds);
        }
    } else {
        sel.lambdas.assign(n_targets, 0.0);
        for (std::size_t c = 0; c < n_targets; ++c) {
            std::vector<double> grid_mean(n_grid, 0.0);
            for (std::size_t g = 0; g < n_grid; ++g) {
                for (std::size_t f = 0; f < n_folds; ++f) grid_mean[g] += scores[g][f][c];
                grid_mean[g] /= double(n_folds);
            }
            const std::size_t pick = pick_best(grid_mean);
            sel.lambdas[c] = grid[pick];
            sel.cv_scores[c] = grid_mean[pick];
        }
    }
    return sel;
}

RidgeModel fit_ridge_cv(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y,
                        const std::vector<double>& grid, const FoldPlan& folds, LambdaMode mode) {
    auto sel = cv_select_lambda(x, y, grid, folds, mode);
    RidgeSolver solver(x, y);

    RidgeModel model;
    model.lambdas = sel.lambdas;
    model.cv_scores = std::move(sel.cv_scores);

    if (mode == LambdaMode::shared) {
        model.weights = solver.solve(model.lambdas[0]);
    } else {
        model.weights = TimeSeriesMatrix(x.cols(), y.cols());
        std::vector<double> distinct = model.lambdas;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (const auto lambda : distinct) {
            const auto w = solver.solve(lambda);
            for (std::size_t c = 0; c < y.cols(); ++c)
                if (model.lambdas[c] == lambda)
                    for (std::size_t i = 0; i < x.cols(); ++i) model.weights(i, c) = w(i, c);
        }
    }
    return model;
}

} // namespace encpipe
