#pragma once

#include <cstddef>
#include <vector>

#include "encpipe/regress.hpp"
#include "encpipe/types.hpp"

namespace encpipe {

struct Vox2VoxConfig {
    DelaySpec delays{1, 2, 3};
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t n_folds = 10;
    const ClipIndex* clips = nullptr;
};

// Autoregressive model: every voxel predicted from the recent history of a
// selected high-accuracy subset.
struct Vox2VoxModel {
    std::vector<std::size_t> selected_voxels; // descending accuracy order
    DelaySpec delays{1, 2, 3};
    RidgeModel ridge;
    std::vector<double> cv_accuracy;
};

// Indices of the m largest accuracies, ordered by descending value with ties
// broken toward the lower index.
std::vector<std::size_t> select_top_voxels(const std::vector<double>& accuracies, std::size_t m);

Vox2VoxModel train_vox2vox(const TimeSeriesMatrix& responses,
                           const std::vector<std::size_t>& selected,
                           const Vox2VoxConfig& config);

// Runs the AR model over a predicted response matrix.  Lagged inputs are read
// from base_prediction itself, so the output at time t depends only on base
// rows strictly before t.
TimeSeriesMatrix apply_vox2vox(const Vox2VoxModel& model, const TimeSeriesMatrix& base_prediction);

// Per-voxel convex blend weighted by relative accuracy (clamped at 0).  When
// neither side has positive accuracy the first prediction wins outright.
TimeSeriesMatrix combine_predictions(const TimeSeriesMatrix& pred_a,
                                     const std::vector<double>& acc_a,
                                     const TimeSeriesMatrix& pred_b,
                                     const std::vector<double>& acc_b);

} // namespace encpipe
