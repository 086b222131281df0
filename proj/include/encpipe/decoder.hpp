#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "encpipe/encoder.hpp"
#include "encpipe/regress.hpp"
#include "encpipe/types.hpp"
#include "encpipe/voxnet.hpp"

namespace encpipe {

// Labels at time t are regressed on responses at t+3, t+4, t+5: the lead
// sense of the hemodynamic delay, expressed as negative delays internally.
struct Vox2LabConfig {
    std::vector<int> leads{3, 4, 5};
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t n_folds = 10;
    const ClipIndex* clips = nullptr;
    bool voxel_pca = false;        // reduce responses to components first
    std::size_t n_voxel_pca = 300;
};

struct Vox2LabModel {
    DelaySpec delays{-5, -4, -3};
    RidgeModel ridge;                   // per-dimension lambdas
    std::optional<PCAModel> voxel_pca;
    std::vector<double> cv_accuracy;    // per label dimension
};

Vox2LabModel train_vox2lab(const TimeSeriesMatrix& responses, const TimeSeriesMatrix& labels,
                           const Vox2LabConfig& config);

// Lead-lagged responses times the trained weights.  Rows near the end read
// zero-padded future samples and attenuate accordingly.
TimeSeriesMatrix estimate_labels(const Vox2LabModel& model, const TimeSeriesMatrix& responses);

// Direct feature-to-label regression, the transfer-learning baseline.  multi
// mode widens each time point with its 1 s neighbors.
enum class TLMode { single, multi };

struct TLConfig {
    std::size_t n_pca = 1000;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t n_folds = 10;
    const ClipIndex* clips = nullptr;
};

struct TLModel {
    TLMode mode = TLMode::single;
    EncoderEnsemble ensemble; // per-layer models over label targets
};

TLModel train_tl(const std::vector<std::string>& names,
                 const std::vector<TimeSeriesMatrix>& features_per_layer,
                 const TimeSeriesMatrix& labels, TLMode mode, const TLConfig& config);

TimeSeriesMatrix estimate_tl(const TLModel& model,
                             const std::vector<TimeSeriesMatrix>& features_per_layer);

// Brain decoding: the same label model, trained on measured responses.
using BDModel = Vox2LabModel;

BDModel train_bd(const TimeSeriesMatrix& measured_responses, const TimeSeriesMatrix& labels,
                 const Vox2LabConfig& config);

// The full feature -> response -> label chain.
struct PipelineBundle {
    EncoderEnsemble encoder;
    std::optional<Vox2VoxModel> vox2vox;
    Vox2LabModel vox2lab;
};

struct BtlConfig {
    EncoderConfig encoder;
    bool use_vox2vox = true;
    std::size_t n_top_voxels = 2000;
    Vox2VoxConfig vox2vox;
    Vox2LabConfig vox2lab;
};

// Trains encoder (and optionally vox2vox) on measured responses, predicts
// responses for the label-training stimuli, and fits vox2lab on those
// predictions rather than on measured data.
PipelineBundle train_btl(const std::vector<std::string>& names,
                         const std::vector<TimeSeriesMatrix>& features_per_layer,
                         const TimeSeriesMatrix& responses, const TimeSeriesMatrix& labels,
                         const BtlConfig& config);

TimeSeriesMatrix run_btl_pipeline(const PipelineBundle& bundle,
                                  const std::vector<TimeSeriesMatrix>& features_per_layer);

// Simple mean across per-participant estimates of the same stimuli.
TimeSeriesMatrix average_estimates(const std::vector<TimeSeriesMatrix>& estimates);

} // namespace encpipe
