#include "encpipe/voxnet.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "encpipe/error.hpp"

namespace encpipe {

std::vector<std::size_t> select_top_voxels(const std::vector<double>& accuracies, std::size_t m) {
    if (m > accuracies.size())
        throw DataError("cannot select " + std::to_string(m) + " voxels out of " +
                        std::to_string(accuracies.size()));
    std::vector<std::size_t> order(accuracies.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return accuracies[a] > accuracies[b];
    });
    order.resize(m);
    return order;
}

Vox2VoxModel train_vox2vox(const TimeSeriesMatrix& responses,
                           const std::vector<std::size_t>& selected,
                           const Vox2VoxConfig& config) {
    if (selected.empty()) throw DataError("vox2vox needs a non-empty voxel selection");
    std::set<std::size_t> distinct;
    for (const auto v : selected) {
        if (v >= responses.cols())
            throw DataError("selected voxel " + std::to_string(v) + " out of range (" +
                            std::to_string(responses.cols()) + " voxels)");
        if (!distinct.insert(v).second)
            throw DataError("selected voxel " + std::to_string(v) + " listed twice");
    }

    Vox2VoxModel model;
    model.selected_voxels = selected;
    model.delays = config.delays;

    auto lagged = make_lagged(responses.take_cols(selected), config.delays);
    const auto folds = config.clips ? FoldPlan::by_clips(*config.clips, config.n_folds)
                                    : FoldPlan::contiguous(responses.rows(), config.n_folds);
    if (config.clips && config.clips->total_rows() != responses.rows())
        throw DataError("clip index covers " + std::to_string(config.clips->total_rows()) +
                        " rows but the responses have " + std::to_string(responses.rows()));
    model.ridge =
        fit_ridge_cv(lagged.matrix, responses, config.lambda_grid, folds, LambdaMode::shared);
    model.cv_accuracy = model.ridge.cv_scores;
    return model;
}

TimeSeriesMatrix apply_vox2vox(const Vox2VoxModel& model, const TimeSeriesMatrix& base_prediction) {
    const std::size_t n = model.ridge.weights.cols();
    if (base_prediction.cols() != n)
        throw DataError("base prediction has " + std::to_string(base_prediction.cols()) +
                        " voxels, model expects " + std::to_string(n));
    auto lagged = make_lagged(base_prediction.take_cols(model.selected_voxels), model.delays);
    return predict(model.ridge, lagged.matrix);
}

TimeSeriesMatrix combine_predictions(const TimeSeriesMatrix& pred_a,
                                     const std::vector<double>& acc_a,
                                     const TimeSeriesMatrix& pred_b,
                                     const std::vector<double>& acc_b) {
    if (!pred_a.same_shape(pred_b)) throw DataError("predictions to combine differ in shape");
    const std::size_t n = pred_a.cols();
    if (acc_a.size() != n || acc_b.size() != n)
        throw DataError("accuracy vectors do not match the voxel count");

    TimeSeriesMatrix out(pred_a.rows(), n);
    for (std::size_t v = 0; v < n; ++v) {
        const double ca = std::max(acc_a[v], 0.0);
        const double cb = std::max(acc_b[v], 0.0);
        double wa = 1.0, wb = 0.0;
        if (ca + cb > 0.0) {
            wa = ca / (ca + cb);
            wb = cb / (ca + cb);
        }
        for (std::size_t r = 0; r < out.rows(); ++r)
            out(r, v) = wa * pred_a(r, v) + wb * pred_b(r, v);
    }
    return out;
}

} // namespace encpipe
