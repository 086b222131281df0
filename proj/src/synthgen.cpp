#include "encpipe/synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <utility>

#include <json.hpp>

#include "encpipe/error.hpp"
#include "encpipe/io.hpp"
#include "encpipe/linalg.hpp"
#include "encpipe/log.hpp"
#include "encpipe/regress.hpp"
#include "encpipe/rng.hpp"

namespace encpipe {

namespace {

using nlohmann::json;

void check_config(const SynthConfig& c) {
    if (c.t_train < 50 || c.t_test < 50)
        throw ConfigError("each split needs at least 50 rows");
    if (c.layer_dims.empty()) throw ConfigError("at least one layer is required");
    for (const auto d : c.layer_dims)
        if (d == 0) throw ConfigError("layer dims must be >= 1");
    if (c.n_voxels == 0 || c.n_labels == 0)
        throw ConfigError("voxel and label counts must be >= 1");
    if (c.label_leads.empty()) throw ConfigError("label leads must be non-empty");
    if (c.noise_sd_response < 0.0 || c.noise_sd_label < 0.0)
        throw ConfigError("noise sd must be >= 0");
    if (c.use_ar) {
        if (c.n_ar_voxels == 0 || c.n_ar_voxels > c.n_voxels)
            throw ConfigError("n_ar_voxels must be in [1, n_voxels]");
        if (c.ar_scale < 0.0 || c.ar_scale >= 1.0)
            throw ConfigError("ar_scale must be in [0, 1) to keep the recursion stable");
    }
    if (c.label_mode == LabelMode::from_features && c.feature_layer >= c.layer_dims.size())
        throw ConfigError("feature_layer out of range");
    if (c.clip_len == 0) throw ConfigError("clip_len must be >= 1");
}

TimeSeriesMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    TimeSeriesMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = scale * rng.next_normal();
    return m;
}

} // namespace

SynthWorld generate(const SynthConfig& config) {
    check_config(config);
    Rng rng(config.seed);

    SynthWorld world;
    world.config = config;
    const std::size_t n_layers = config.layer_dims.size();
    const std::size_t n = config.n_voxels;
    for (std::size_t l = 0; l < n_layers; ++l)
        world.layer_names.push_back("layer" + std::to_string(l));

    // drive weights: voxel v is fed by layer v mod L, scaled so the summed
    // drive has roughly unit variance against z-scored features
    const std::size_t n_drive = config.drive_delays.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t d = config.layer_dims[l];
        const double scale = 1.0 / std::sqrt(double(d * n_drive));
        TimeSeriesMatrix w(d * n_drive, n);
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t v = 0; v < n; ++v)
                w(r, v) = (v % n_layers == l) ? scale * rng.next_normal() : 0.0;
        world.drive_weights.push_back(std::move(w));
    }

    if (config.use_ar) {
        for (std::size_t v = 0; v < config.n_ar_voxels; ++v) world.ar_voxels.push_back(v);
        const std::size_t rows = config.n_ar_voxels * config.ar_delays.size();
        const double scale = config.ar_scale / std::sqrt(double(rows));
        world.ar_weights = gaussian_matrix(rng, rows, n, scale);
    }

    const auto lead_delays = DelaySpec::from_leads(config.label_leads);
    if (config.label_mode == LabelMode::from_responses) {
        const std::size_t rows = n * lead_delays.size();
        world.lead_weights = gaussian_matrix(rng, rows, config.n_labels,
                                             1.0 / std::sqrt(double(rows)));
    } else {
        const std::size_t d = config.layer_dims[config.feature_layer];
        world.lead_weights =
            gaussian_matrix(rng, d, config.n_labels, 1.0 / std::sqrt(double(d)));
    }

    // draw the remaining random inputs in a fixed order, then derive both
    // splits with train-fit normalization so test data lives in the scale
    // the models are trained in
    auto draw_features = [&](std::size_t t) {
        std::vector<TimeSeriesMatrix> raw;
        for (std::size_t l = 0; l < n_layers; ++l)
            raw.push_back(gaussian_matrix(rng, t, config.layer_dims[l], 1.0));
        return raw;
    };
    auto raw_feat_train = draw_features(config.t_train);
    auto raw_feat_test = draw_features(config.t_test);
    TimeSeriesMatrix noise_train, noise_test;
    if (config.noise_sd_response > 0.0) {
        noise_train = gaussian_matrix(rng, config.t_train, n, config.noise_sd_response);
        noise_test = gaussian_matrix(rng, config.t_test, n, config.noise_sd_response);
    }
    TimeSeriesMatrix lnoise_train, lnoise_test;
    if (config.noise_sd_label > 0.0) {
        lnoise_train = gaussian_matrix(rng, config.t_train, config.n_labels,
                                       config.noise_sd_label);
        lnoise_test = gaussian_matrix(rng, config.t_test, config.n_labels,
                                      config.noise_sd_label);
    }

    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto stats = fit_zscore(raw_feat_train[l]);
        world.train.features.push_back(apply_zscore(raw_feat_train[l], stats));
        world.test.features.push_back(apply_zscore(raw_feat_test[l], stats));
    }

    auto make_raw_responses = [&](const std::vector<TimeSeriesMatrix>& features,
                                  const TimeSeriesMatrix& noise, std::size_t t) {
        TimeSeriesMatrix drive(t, n);
        for (std::size_t l = 0; l < n_layers; ++l) {
            auto lagged = make_lagged(features[l], config.drive_delays);
            auto part = linalg::matmul(lagged.matrix, world.drive_weights[l]);
            for (std::size_t r = 0; r < t; ++r)
                for (std::size_t v = 0; v < n; ++v) drive(r, v) += part(r, v);
        }

        TimeSeriesMatrix raw_resp(t, n);
        if (config.use_ar) {
            // row-by-row recursion with zero initial conditions; each split
            // is its own session
            const std::size_t n_sel = world.ar_voxels.size();
            for (std::size_t r = 0; r < t; ++r) {
                for (std::size_t v = 0; v < n; ++v) {
                    double acc = drive(r, v);
                    for (std::size_t k = 0; k < config.ar_delays.size(); ++k) {
                        const int delay = config.ar_delays[k];
                        const long src = long(r) - delay;
                        if (src < 0) continue;
                        for (std::size_t m = 0; m < n_sel; ++m)
                            acc += raw_resp(std::size_t(src), world.ar_voxels[m]) *
                                   world.ar_weights(k * n_sel + m, v);
                    }
                    if (noise.rows()) acc += noise(r, v);
                    raw_resp(r, v) = acc;
                }
            }
        } else {
            for (std::size_t r = 0; r < t; ++r)
                for (std::size_t v = 0; v < n; ++v)
                    raw_resp(r, v) = drive(r, v) + (noise.rows() ? noise(r, v) : 0.0);
        }
        return raw_resp;
    };
    auto raw_resp_train = make_raw_responses(world.train.features, noise_train, config.t_train);
    auto raw_resp_test = make_raw_responses(world.test.features, noise_test, config.t_test);
    world.response_stats = fit_zscore(raw_resp_train);
    world.train.responses = apply_zscore(raw_resp_train, world.response_stats);
    world.test.responses = apply_zscore(raw_resp_test, world.response_stats);

    auto make_raw_labels = [&](const SynthSplit& split, const TimeSeriesMatrix& lnoise,
                               std::size_t t) {
        TimeSeriesMatrix raw;
        if (config.label_mode == LabelMode::from_responses) {
            auto lagged = make_lagged(split.responses, lead_delays);
            raw = linalg::matmul(lagged.matrix, world.lead_weights);
        } else {
            raw = linalg::matmul(split.features[config.feature_layer], world.lead_weights);
        }
        if (lnoise.rows())
            for (std::size_t r = 0; r < t; ++r)
                for (std::size_t c = 0; c < config.n_labels; ++c) raw(r, c) += lnoise(r, c);
        return raw;
    };
    auto raw_lab_train = make_raw_labels(world.train, lnoise_train, config.t_train);
    auto raw_lab_test = make_raw_labels(world.test, lnoise_test, config.t_test);
    world.label_stats = fit_zscore(raw_lab_train);
    world.train.labels = apply_zscore(raw_lab_train, world.label_stats);
    world.test.labels = apply_zscore(raw_lab_test, world.label_stats);

    world.train.clips = ClipIndex::uniform(config.t_train, config.clip_len);
    world.test.clips = ClipIndex::uniform(config.t_test, config.clip_len);
    log_info("generated world: " + std::to_string(n_layers) + " layers, " + std::to_string(n) +
             " voxels, " + std::to_string(config.t_train) + "+" +
             std::to_string(config.t_test) + " rows");
    return world;
}

namespace {

json stats_to_json(const ZScoreStats& s) {
    return json{{"means", s.means}, {"stds", s.stds}};
}

} // namespace

void save_world(const SynthWorld& world, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "truth");

    json manifest;
    manifest["format"] = "encpipe-world-v1";
    const auto& c = world.config;
    manifest["config"] = {
        {"seed", c.seed},
        {"t_train", c.t_train},
        {"t_test", c.t_test},
        {"layer_dims", c.layer_dims},
        {"n_voxels", c.n_voxels},
        {"n_labels", c.n_labels},
        {"drive_delays", c.drive_delays.delays()},
        {"label_leads", c.label_leads},
        {"use_ar", c.use_ar},
        {"n_ar_voxels", c.n_ar_voxels},
        {"ar_delays", c.ar_delays.delays()},
        {"ar_scale", c.ar_scale},
        {"noise_sd_response", c.noise_sd_response},
        {"noise_sd_label", c.noise_sd_label},
        {"clip_len", c.clip_len},
        {"label_mode",
         c.label_mode == LabelMode::from_responses ? "from_responses" : "from_features"},
        {"feature_layer", c.feature_layer},
    };
    manifest["layer_names"] = world.layer_names;
    manifest["ar_voxels"] = world.ar_voxels;

    json files;
    auto put = [&](const std::string& key, const std::string& rel) { files[key] = rel; };

    for (std::size_t l = 0; l < world.layer_names.size(); ++l) {
        const auto& name = world.layer_names[l];
        save_matrix(world.train.features[l], fs::path(dir) / ("features_train_" + name + ".emx"));
        save_matrix(world.test.features[l], fs::path(dir) / ("features_test_" + name + ".emx"));
        save_matrix(world.drive_weights[l],
                    fs::path(dir) / "truth" / ("drive_weights_" + name + ".emx"));
        put("features_train_" + name, "features_train_" + name + ".emx");
        put("features_test_" + name, "features_test_" + name + ".emx");
    }
    save_matrix(world.train.responses, fs::path(dir) / "responses_train.emx");
    save_matrix(world.test.responses, fs::path(dir) / "responses_test.emx");
    save_matrix(world.train.labels, fs::path(dir) / "labels_train.emx");
    save_matrix(world.test.labels, fs::path(dir) / "labels_test.emx");
    save_clip_index(world.train.clips, fs::path(dir) / "clips_train.csv");
    save_clip_index(world.test.clips, fs::path(dir) / "clips_test.csv");
    put("responses_train", "responses_train.emx");
    put("responses_test", "responses_test.emx");
    put("labels_train", "labels_train.emx");
    put("labels_test", "labels_test.emx");
    put("clips_train", "clips_train.csv");
    put("clips_test", "clips_test.csv");

    if (world.config.use_ar) {
        save_matrix(world.ar_weights, fs::path(dir) / "truth" / "ar_weights.emx");
        put("ar_weights", "truth/ar_weights.emx");
    }
    save_matrix(world.lead_weights, fs::path(dir) / "truth" / "lead_weights.emx");
    put("lead_weights", "truth/lead_weights.emx");
    manifest["files"] = files;

    manifest["zscore"] = {
        {"responses", stats_to_json(world.response_stats)},
        {"labels", stats_to_json(world.label_stats)},
    };

    write_text_file(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
    log_info("world written to " + dir);
}

} // namespace encpipe
