#include "encpipe/encoder.hpp"

#include <algorithm>
#include <string>

#include "encpipe/error.hpp"
#include "encpipe/log.hpp"

namespace encpipe {

namespace {

FoldPlan make_folds(std::size_t rows, const EncoderConfig& config) {
    if (config.clips) {
        if (config.clips->total_rows() != rows)
            throw DataError("clip index covers " + std::to_string(config.clips->total_rows()) +
                            " rows but the data has " + std::to_string(rows));
        return FoldPlan::by_clips(*config.clips, config.n_folds);
    }
    return FoldPlan::contiguous(rows, config.n_folds);
}

} // namespace

LayerEncoder train_layer_encoder(const TimeSeriesMatrix& features,
                                 const TimeSeriesMatrix& responses, const EncoderConfig& config) {
    if (features.rows() != responses.rows())
        throw DataError("feature rows (" + std::to_string(features.rows()) +
                        ") do not match response rows (" + std::to_string(responses.rows()) + ")");
    if (config.n_pca == 0) throw ConfigError("n_pca must be >= 1");

    LayerEncoder enc;
    enc.layer_name = config.layer_name;
    enc.delays = config.delays;

    const std::size_t n_comp = std::min({features.cols(), features.rows(), config.n_pca});
    enc.pca = fit_pca(features, n_comp);
    log_debug("layer " + (enc.layer_name.empty() ? std::string("?") : enc.layer_name) + ": " +
              std::to_string(features.cols()) + " dims -> " + std::to_string(n_comp) +
              " components");

    auto lagged = make_lagged(apply_pca(features, enc.pca), enc.delays);
    const auto folds = make_folds(features.rows(), config);
    enc.ridge =
        fit_ridge_cv(lagged.matrix, responses, config.lambda_grid, folds, config.lambda_mode);
    enc.cv_accuracy = enc.ridge.cv_scores;
    return enc;
}

TimeSeriesMatrix predict_layer(const LayerEncoder& enc, const TimeSeriesMatrix& features) {
    auto lagged = make_lagged(apply_pca(features, enc.pca), enc.delays);
    return predict(enc.ridge, lagged.matrix);
}

TimeSeriesMatrix compute_ensemble_weights(const TimeSeriesMatrix& accuracies) {
    const std::size_t n = accuracies.rows(), l = accuracies.cols();
    TimeSeriesMatrix weights(n, l);
    for (std::size_t v = 0; v < n; ++v) {
        double total = 0.0;
        for (std::size_t i = 0; i < l; ++i) total += std::max(accuracies(v, i), 0.0);
        if (total > 0.0) {
            for (std::size_t i = 0; i < l; ++i)
                weights(v, i) = std::max(accuracies(v, i), 0.0) / total;
        } else {
            for (std::size_t i = 0; i < l; ++i) weights(v, i) = 1.0 / double(l);
        }
    }
    return weights;
}

EncoderEnsemble train_encoder_ensemble(const std::vector<std::string>& names,
                                       const std::vector<TimeSeriesMatrix>& features,
                                       const TimeSeriesMatrix& responses,
                                       const EncoderConfig& config) {
    if (names.size() != features.size())
        throw DataError("got " + std::to_string(names.size()) + " layer names for " +
                        std::to_string(features.size()) + " feature matrices");
    if (features.empty()) throw DataError("ensemble needs at least one layer");

    EncoderEnsemble ens;
    ens.layers.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        EncoderConfig layer_config = config;
        layer_config.layer_name = names[i];
        log_info("training layer " + names[i]);
        ens.layers.push_back(train_layer_encoder(features[i], responses, layer_config));
    }

    const std::size_t n = responses.cols(), l = ens.layers.size();
    TimeSeriesMatrix acc(n, l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t v = 0; v < n; ++v) acc(v, i) = ens.layers[i].cv_accuracy[v];
    ens.weights = compute_ensemble_weights(acc);
    return ens;
}

TimeSeriesMatrix ensemble_predict(const EncoderEnsemble& ens,
                                  const std::vector<TimeSeriesMatrix>& features_per_layer) {
    if (features_per_layer.size() != ens.layers.size())
        throw DataError("ensemble has " + std::to_string(ens.layers.size()) +
                        " layers but got " + std::to_string(features_per_layer.size()) +
                        " feature matrices");

    const std::size_t n = ens.weights.rows();
    TimeSeriesMatrix out;
    for (std::size_t i = 0; i < ens.layers.size(); ++i) {
        auto pred = predict_layer(ens.layers[i], features_per_layer[i]);
        if (pred.cols() != n)
            throw DataError("layer " + ens.layers[i].layer_name + " predicts " +
                            std::to_string(pred.cols()) + " voxels, expected " +
                            std::to_string(n));
        if (i == 0) {
            out = TimeSeriesMatrix(pred.rows(), n);
            for (std::size_t r = 0; r < out.rows(); ++r)
                for (std::size_t v = 0; v < n; ++v) out(r, v) = 0.0;
        } else if (pred.rows() != out.rows()) {
            throw DataError("layer feature matrices disagree on row count");
        }
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t v = 0; v < n; ++v) out(r, v) += ens.weights(v, i) * pred(r, v);
    }
    return out;
}

std::vector<double> ensemble_accuracy(const EncoderEnsemble& ens) {
    const std::size_t n = ens.weights.rows(), l = ens.weights.cols();
    std::vector<double> acc(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < l; ++i) acc[v] += ens.weights(v, i) * ens.layers[i].cv_accuracy[v];
    return acc;
}

} // namespace encpipe
