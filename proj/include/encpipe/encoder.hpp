#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "encpipe/regress.hpp"
#include "encpipe/types.hpp"

namespace encpipe {

// Knobs for one feature-to-response model.  The clip index, when given,
// aligns CV folds to clip boundaries.
struct EncoderConfig {
    std::string layer_name;
    std::size_t n_pca = 1000;
    DelaySpec delays{3, 4, 5, 6};
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t n_folds = 10;
    LambdaMode lambda_mode = LambdaMode::shared;
    const ClipIndex* clips = nullptr;
};

// One layer's feature-space model: PCA, lag embedding, shared-lambda ridge.
struct LayerEncoder {
    std::string layer_name;
    PCAModel pca;
    DelaySpec delays{3, 4, 5, 6};
    RidgeModel ridge;
    std::vector<double> cv_accuracy; // per-voxel CV Pearson r
};

// Accuracy-weighted collection of layer models.  weights is voxels x layers,
// rows non-negative and summing to 1.
struct EncoderEnsemble {
    std::vector<LayerEncoder> layers;
    TimeSeriesMatrix weights;
};

LayerEncoder train_layer_encoder(const TimeSeriesMatrix& features,
                                 const TimeSeriesMatrix& responses, const EncoderConfig& config);

// PCA projection, lag embedding, ridge, in that order.
TimeSeriesMatrix predict_layer(const LayerEncoder& enc, const TimeSeriesMatrix& features);

// Per voxel: clamp negative accuracies to 0 and normalize to sum 1; a row
// with nothing positive falls back to uniform weights.
TimeSeriesMatrix compute_ensemble_weights(const TimeSeriesMatrix& accuracies);

// Trains one LayerEncoder per feature matrix (config.layer_name is overridden
// by the matching entry of names) and derives the voxel weights.
EncoderEnsemble train_encoder_ensemble(const std::vector<std::string>& names,
                                       const std::vector<TimeSeriesMatrix>& features,
                                       const TimeSeriesMatrix& responses,
                                       const EncoderConfig& config);

TimeSeriesMatrix ensemble_predict(const EncoderEnsemble& ens,
                                  const std::vector<TimeSeriesMatrix>& features_per_layer);

// Accuracy attributed to the blended prediction: the weight-averaged layer
// CV accuracy per voxel, reused downstream as the cnn2vox side of the
// relative-accuracy combination.
std::vector<double> ensemble_accuracy(const EncoderEnsemble& ens);

} // namespace encpipe
