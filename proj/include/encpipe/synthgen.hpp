#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "encpipe/preprocess.hpp"
#include "encpipe/types.hpp"

namespace encpipe {

// How the ground-truth labels are wired up.  from_responses reads the
// voxel series at forward leads (label structure only reachable through the
// response space); from_features makes labels linear in one layer's features
// at the same time point (a world where direct feature regression suffices).
enum class LabelMode { from_responses, from_features };

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t t_train = 2000;
    std::size_t t_test = 400;
    std::vector<std::size_t> layer_dims{50, 50, 50};
    std::size_t n_voxels = 200;
    std::size_t n_labels = 5;
    DelaySpec drive_delays{3, 4, 5, 6};
    std::vector<int> label_leads{3, 4, 5};
    bool use_ar = false;
    std::size_t n_ar_voxels = 20;
    DelaySpec ar_delays{1, 2, 3};
    double ar_scale = 0.5;          // RMS feedback gain, keep < 1
    double noise_sd_response = 0.0;
    double noise_sd_label = 0.0;
    std::size_t clip_len = 15;
    LabelMode label_mode = LabelMode::from_responses;
    std::size_t feature_layer = 0;  // source layer in from_features mode
};

// One split's generated series. All normalization uses train-fit statistics,
// so the test split is in the same scale the models are trained in.
struct SynthSplit {
    std::vector<TimeSeriesMatrix> features; // one per layer, already z-scored
    TimeSeriesMatrix responses;
    TimeSeriesMatrix labels;
    ClipIndex clips;
};

struct SynthWorld {
    SynthConfig config;
    std::vector<std::string> layer_names;
    // per-layer drive weights, (D_l * |drive_delays|) x N; columns outside
    // the layer's voxel group are zero
    std::vector<TimeSeriesMatrix> drive_weights;
    std::vector<std::size_t> ar_voxels;   // empty unless use_ar
    TimeSeriesMatrix ar_weights;          // (|ar_voxels| * |ar_delays|) x N
    TimeSeriesMatrix lead_weights;        // (N * |leads|) x n_labels, or
                                          // D_feature x n_labels in from_features mode
    // raw -> stored transforms, fit on the train split and applied to both
    // (needed to reproduce the stored data from the raw truth)
    ZScoreStats response_stats;
    ZScoreStats label_stats;
    SynthSplit train;
    SynthSplit test;
};

SynthWorld generate(const SynthConfig& config);

// Writes the split matrices, clip indices, ground-truth weights, and a
// manifest JSON into dir (created if absent).
void save_world(const SynthWorld& world, const std::string& dir);

} // namespace encpipe
