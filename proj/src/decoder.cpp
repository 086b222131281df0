#include "encpipe/decoder.hpp"

#include <algorithm>
#include <utility>

#include "encpipe/error.hpp"
#include "encpipe/log.hpp"

namespace encpipe {

namespace {

FoldPlan make_folds(std::size_t rows, std::size_t n_folds, const ClipIndex* clips) {
    if (clips) {
        if (clips->total_rows() != rows)
            throw DataError("clip index covers " + std::to_string(clips->total_rows()) +
                            " rows but the data has " + std::to_string(rows));
        return FoldPlan::by_clips(*clips, n_folds);
    }
    return FoldPlan::contiguous(rows, n_folds);
}

// Rethrows stage errors with the stage name prefixed, keeping the category.
template <typename F>
auto run_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(stage) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(stage) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string(stage) + ": " + e.what());
    }
}

} // namespace

Vox2LabModel train_vox2lab(const TimeSeriesMatrix& responses, const TimeSeriesMatrix& labels,
                           const Vox2LabConfig& config) {
    if (responses.rows() != labels.rows())
        throw DataError("response rows (" + std::to_string(responses.rows()) +
                        ") do not match label rows (" + std::to_string(labels.rows()) + ")");
    if (config.leads.empty()) throw ConfigError("vox2lab needs at least one lead");

    Vox2LabModel model;
    model.delays = DelaySpec::from_leads(config.leads);

    const TimeSeriesMatrix* input = &responses;
    TimeSeriesMatrix reduced;
    if (config.voxel_pca) {
        const std::size_t n_comp =
            std::min({responses.cols(), responses.rows(), config.n_voxel_pca});
        model.voxel_pca = fit_pca(responses, n_comp);
        reduced = apply_pca(responses, *model.voxel_pca);
        input = &reduced;
    }

    auto lagged = make_lagged(*input, model.delays);
    const auto folds = make_folds(responses.rows(), config.n_folds, config.clips);
    model.ridge = fit_ridge_cv(lagged.matrix, labels, config.lambda_grid, folds,
                               LambdaMode::per_target);
    model.cv_accuracy = model.ridge.cv_scores;
    return model;
}

TimeSeriesMatrix estimate_labels(const Vox2LabModel& model, const TimeSeriesMatrix& responses) {
    const TimeSeriesMatrix* input = &responses;
    TimeSeriesMatrix reduced;
    if (model.voxel_pca) {
        reduced = apply_pca(responses, *model.voxel_pca);
        input = &reduced;
    }
    auto lagged = make_lagged(*input, model.delays);
    return predict(model.ridge, lagged.matrix);
}

TLModel train_tl(const std::vector<std::string>& names,
                 const std::vector<TimeSeriesMatrix>& features_per_layer,
                 const TimeSeriesMatrix& labels, TLMode mode, const TLConfig& config) {
    EncoderConfig layer_config;
    layer_config.n_pca = config.n_pca;
    layer_config.delays = mode == TLMode::multi ? DelaySpec{-1, 0, 1} : DelaySpec{0};
    layer_config.lambda_grid = config.lambda_grid;
    layer_config.n_folds = config.n_folds;
    layer_config.lambda_mode = LambdaMode::per_target;
    layer_config.clips = config.clips;

    TLModel model;
    model.mode = mode;
    model.ensemble = train_encoder_ensemble(names, features_per_layer, labels, layer_config);
    return model;
}

TimeSeriesMatrix estimate_tl(const TLModel& model,
                             const std::vector<TimeSeriesMatrix>& features_per_layer) {
    return ensemble_predict(model.ensemble, features_per_layer);
}

BDModel train_bd(const TimeSeriesMatrix& measured_responses, const TimeSeriesMatrix& labels,
                 const Vox2LabConfig& config) {
    return train_vox2lab(measured_responses, labels, config);
}

PipelineBundle train_btl(const std::vector<std::string>& names,
                         const std::vector<TimeSeriesMatrix>& features_per_layer,
                         const TimeSeriesMatrix& responses, const TimeSeriesMatrix& labels,
                         const BtlConfig& config) {
    PipelineBundle bundle;
    bundle.encoder = run_stage("cnn2vox", [&] {
        return train_encoder_ensemble(names, features_per_layer, responses, config.encoder);
    });

    if (config.use_vox2vox) {
        bundle.vox2vox = run_stage("vox2vox", [&] {
            const auto acc = ensemble_accuracy(bundle.encoder);
            const auto selected =
                select_top_voxels(acc, std::min(config.n_top_voxels, acc.size()));
            return train_vox2vox(responses, selected, config.vox2vox);
        });
    }

    // vox2lab learns from what the deployed pipeline will actually feed it:
    // predicted responses to the label-training stimuli
    auto predicted = run_stage("cnn2vox", [&] {
        return ensemble_predict(bundle.encoder, features_per_layer);
    });
    if (bundle.vox2vox) {
        predicted = run_stage("vox2vox", [&] {
            auto ar = apply_vox2vox(*bundle.vox2vox, predicted);
            return combine_predictions(predicted, ensemble_accuracy(bundle.encoder), ar,
                                       bundle.vox2vox->cv_accuracy);
        });
    }
    bundle.vox2lab =
        run_stage("vox2lab", [&] { return train_vox2lab(predicted, labels, config.vox2lab); });
    return bundle;
}

TimeSeriesMatrix run_btl_pipeline(const PipelineBundle& bundle,
                                  const std::vector<TimeSeriesMatrix>& features_per_layer) {
    auto predicted = run_stage("cnn2vox", [&] {
        return ensemble_predict(bundle.encoder, features_per_layer);
    });
    if (bundle.vox2vox) {
        predicted = run_stage("vox2vox", [&] {
            auto ar = apply_vox2vox(*bundle.vox2vox, predicted);
            return combine_predictions(predicted, ensemble_accuracy(bundle.encoder), ar,
                                       bundle.vox2vox->cv_accuracy);
        });
    }
    return run_stage("vox2lab", [&] { return estimate_labels(bundle.vox2lab, predicted); });
}

TimeSeriesMatrix average_estimates(const std::vector<TimeSeriesMatrix>& estimates) {
    if (estimates.empty()) throw DataError("no estimates to average");
    TimeSeriesMatrix out(estimates.front().rows(), estimates.front().cols());
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = 0.0;
    for (const auto& est : estimates) {
        if (!est.same_shape(out)) throw DataError("estimates to average differ in shape");
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += est(r, c);
    }
    const double inv = 1.0 / double(estimates.size());
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= inv;
    return out;
}

} // namespace encpipe
