#pragma once

#include <cstddef>
#include <vector>

#include "encpipe/types.hpp"

namespace encpipe {

// Temporal lag embedding: block k holds the source shifted by delays[k],
// zero-padded where the shift runs off either end.
struct LaggedDesign {
    std::size_t source_dims = 0;
    DelaySpec delays{0};
    TimeSeriesMatrix matrix;
};

LaggedDesign make_lagged(const TimeSeriesMatrix& m, const DelaySpec& delays);

struct PCAModel {
    std::vector<double> means;
    TimeSeriesMatrix components; // n_components x D, orthonormal rows
    std::vector<double> explained_variance; // population convention, non-increasing

    std::size_t dim() const { return means.size(); }
    std::size_t n_components() const { return components.rows(); }
};

PCAModel fit_pca(const TimeSeriesMatrix& m, std::size_t n_components);
TimeSeriesMatrix apply_pca(const TimeSeriesMatrix& m, const PCAModel& p);

struct RidgeModel {
    TimeSeriesMatrix weights;      // D_in x D_out
    std::vector<double> lambdas;   // size 1 (shared) or D_out (per-target)
    std::vector<double> cv_scores; // per-target CV Pearson r; empty without CV
    bool min_norm = false;         // lambda = 0 hit a rank-deficient design
};

// Factors the design once; solve(lambda) is then cheap for any lambda and
// every target column.  Tall problems go through the feature Gram, wide ones
// through the sample Gram.
class RidgeSolver {
public:
    RidgeSolver(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y);

    TimeSeriesMatrix solve(double lambda) const;
    bool min_norm_at(double lambda) const;

    std::size_t n_features() const { return n_features_; }
    std::size_t n_targets() const { return n_targets_; }

private:
    std::size_t n_features_ = 0;
    std::size_t n_targets_ = 0;
    bool tall_ = true;
    std::vector<double> eigvals_;
    TimeSeriesMatrix basis_;  // tall: eigvectors of X'X;  wide: U X
    TimeSeriesMatrix coeffs_; // tall: V (X'Y);           wide: U Y
    double drop_tol_ = 0.0;   // eigenvalues at or below this vanish at lambda 0
};

RidgeModel fit_ridge(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y, double lambda);

TimeSeriesMatrix predict(const RidgeModel& model, const TimeSeriesMatrix& x);

// Contiguous-block fold assignment; with a clip index, blocks are unions of
// whole clips.
struct FoldPlan {
    std::size_t n_folds = 0;
    std::vector<std::size_t> assignment;

    static FoldPlan contiguous(std::size_t n_rows, std::size_t n_folds);
    static FoldPlan by_clips(const ClipIndex& idx, std::size_t n_folds);

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> train_rows(std::size_t fold) const;
};

enum class LambdaMode { shared, per_target };

std::vector<double> default_lambda_grid(); // 17 log-spaced values, 1e-4 .. 1e4

struct CvSelection {
    std::vector<double> lambdas;    // size 1 (shared) or n_targets
    std::vector<double> cv_scores;  // per-target mean fold r at the selection
};

// Grid search with fold-wise scoring.  The winner maximizes the mean fold r
// (averaged over all targets in shared mode); ties resolve toward the larger
// lambda, so score curves that are flat in lambda shrink maximally.
// Undefined fold correlations score 0.
CvSelection cv_select_lambda(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y,
                             const std::vector<double>& grid, const FoldPlan& folds,
                             LambdaMode mode);

// cv_select_lambda followed by a refit on all rows at the selected lambda(s).
RidgeModel fit_ridge_cv(const TimeSeriesMatrix& x, const TimeSeriesMatrix& y,
                        const std::vector<double>& grid, const FoldPlan& folds, LambdaMode mode);

} // namespace encpipe
