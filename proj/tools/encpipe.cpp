// Config-driven front end: composes synthesis, encoding, refinement, label
// estimation, and evaluation into scriptable subcommands.  Every run drops an
// execution manifest next to its artifacts; `replay` re-executes a manifest
// and diffs the results.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unistd.h>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "encpipe/decoder.hpp"
#include "encpipe/encoder.hpp"
#include "encpipe/error.hpp"
#include "encpipe/eval.hpp"
#include "encpipe/io.hpp"
#include "encpipe/log.hpp"
#include "encpipe/parallel.hpp"
#include "encpipe/preprocess.hpp"
#include "encpipe/regress.hpp"
#include "encpipe/serialize.hpp"
#include "encpipe/synthgen.hpp"
#include "encpipe/types.hpp"
#include "encpipe/voxnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace encpipe;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kRunFormat = "encpipe-run-v1";

// ---------------------------------------------------------------------------
// content hashing (FNV-1a 64 over raw bytes)

std::string hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// ---------------------------------------------------------------------------
// config file handling: JSON, strict about unknown keys, paths resolved
// relative to the config file's directory

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ConfigError("unknown config key: " + where + "." + key);
    }
}

class Config {
public:
    static Config from_file(const std::string& path) {
        if (path.empty()) throw ConfigError("missing --config");
        if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
        json root;
        try {
            root = json::parse(read_text_file(path));
        } catch (const json::exception& e) {
            throw ConfigError("config " + path + ": " + e.what());
        }
        return Config(std::move(root), fs::absolute(fs::path(path)).parent_path());
    }

    static Config from_snapshot(json root, fs::path base) {
        return Config(std::move(root), std::move(base));
    }

    Config(json root, fs::path base) : root_(std::move(root)), base_(std::move(base)) {
        if (!root_.is_object()) throw ConfigError("config root must be a JSON object");
        reject_unknown(root_, "config",
                       {"threads", "synth", "data", "encoder", "vox2vox", "decoder", "models",
                        "eval", "variability", "sweep", "plot"});
        if (root_.contains("threads") && !root_.at("threads").is_number_unsigned())
            throw ConfigError("threads: expected an unsigned integer");
        validate_keys("synth",
                      {"seed", "t_train", "t_test", "layer_dims", "n_voxels", "n_labels",
                       "drive_delays", "label_leads", "use_ar", "n_ar_voxels", "ar_delays",
                       "ar_scale", "noise_sd_response", "noise_sd_label", "clip_len",
                       "label_mode", "feature_layer"});
        validate_keys("data",
                      {"train_features", "test_features", "train_responses", "test_responses",
                       "train_labels", "test_labels", "train_clips", "test_clips"});
        validate_keys("encoder", {"n_pca", "delays", "lambda_grid", "n_folds"});
        validate_keys("vox2vox", {"delays", "n_top_voxels", "lambda_grid", "n_folds"});
        validate_keys("decoder", {"leads", "lambda_grid", "n_folds", "voxel_pca", "n_voxel_pca",
                                  "use_vox2vox", "tl_n_pca"});
        validate_keys("models", {"encoder", "vox2vox", "bundle", "tl", "vox2lab"});
        validate_keys("eval", {"truth", "estimates", "trim_head_rows", "trim_tail_rows",
                               "n_boot", "seed", "unit", "clips"});
        validate_keys("variability", {"sources_a", "sources_b"});
        validate_keys("sweep", {"sizes", "n_seeds", "seed", "method"});
        validate_keys("plot", {"source"});
    }

    unsigned threads_hint() const {
        return root_.contains("threads") ? root_.at("threads").get<unsigned>() : 0;
    }

    const json& root() const { return root_; }
    const fs::path& base_dir() const { return base_; }

    bool has(const char* name) const { return root_.contains(name); }

    const json& section(const char* name) const {
        if (!root_.contains(name))
            throw ConfigError(std::string("missing config section '") + name + "'");
        const json& sec = root_.at(name);
        if (!sec.is_object())
            throw ConfigError(std::string("config section '") + name + "' must be an object");
        return sec;
    }

    // section if present, else an empty object so defaults apply
    const json& section_or_empty(const char* name) const {
        static const json empty = json::object();
        return root_.contains(name) ? section(name) : empty;
    }

    fs::path resolve(const std::string& p) const {
        fs::path candidate(p);
        return candidate.is_absolute() ? candidate : base_ / candidate;
    }

private:
    void validate_keys(const char* name, std::initializer_list<const char*> known) const {
        if (!root_.contains(name)) return;
        const json& sec = root_.at(name);
        if (!sec.is_object())
            throw ConfigError(std::string("config section '") + name + "' must be an object");
        reject_unknown(sec, name, known);
    }

    json root_;
    fs::path base_;
};

[[noreturn]] void field_fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

std::string field_name(const char* sec, const char* key) {
    return std::string(sec) + "." + key;
}

std::uint64_t get_u64(const json& sec, const char* secname, const char* key,
                      std::uint64_t fallback) {
    if (!sec.contains(key)) return fallback;
    const json& v = sec.at(key);
    if (!v.is_number_unsigned()) field_fail(field_name(secname, key), "expected an unsigned integer");
    return v.get<std::uint64_t>();
}

std::size_t get_size(const json& sec, const char* secname, const char* key, std::size_t fallback) {
    return static_cast<std::size_t>(get_u64(sec, secname, key, fallback));
}

double get_double(const json& sec, const char* secname, const char* key, double fallback) {
    if (!sec.contains(key)) return fallback;
    const json& v = sec.at(key);
    if (!v.is_number()) field_fail(field_name(secname, key), "expected a number");
    return v.get<double>();
}

bool get_bool(const json& sec, const char* secname, const char* key, bool fallback) {
    if (!sec.contains(key)) return fallback;
    const json& v = sec.at(key);
    if (!v.is_boolean()) field_fail(field_name(secname, key), "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& sec, const char* secname, const char* key,
                       const std::string& fallback) {
    if (!sec.contains(key)) return fallback;
    const json& v = sec.at(key);
    if (!v.is_string()) field_fail(field_name(secname, key), "expected a string");
    return v.get<std::string>();
}

template <typename T>
std::vector<T> get_array(const json& sec, const char* secname, const char* key,
                         std::vector<T> fallback) {
    if (!sec.contains(key)) return fallback;
    const json& v = sec.at(key);
    if (!v.is_array()) field_fail(field_name(secname, key), "expected an array");
    try {
        return v.get<std::vector<T>>();
    } catch (const json::exception&) {
        field_fail(field_name(secname, key), "array has the wrong element type");
    }
}

DelaySpec get_delays(const json& sec, const char* secname, const char* key,
                     const DelaySpec& fallback) {
    if (!sec.contains(key)) return fallback;
    auto values = get_array<int>(sec, secname, key, {});
    try {
        return DelaySpec(std::move(values));
    } catch (const DataError& e) {
        field_fail(field_name(secname, key), e.what());
    }
}

// required path that must exist on disk at validation time
fs::path get_path(const Config& config, const json& sec, const char* secname, const char* key) {
    if (!sec.contains(key)) field_fail(field_name(secname, key), "missing required path");
    const json& v = sec.at(key);
    if (!v.is_string()) field_fail(field_name(secname, key), "expected a path string");
    fs::path p = config.resolve(v.get<std::string>());
    if (!fs::exists(p)) field_fail(field_name(secname, key), "file not found: " + p.string());
    return p;
}

bool has_path(const json& sec, const char* key) { return sec.contains(key); }

// ---------------------------------------------------------------------------
// layer feature manifests: JSON list of {layer_name, feature_path, modality_tag}

struct LayerEntry {
    std::string name;
    fs::path path;
    std::string tag;
};

std::vector<LayerEntry> load_layer_manifest(const fs::path& manifest_path) {
    json root;
    try {
        root = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("layer manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!root.is_array() || root.empty())
        throw DataError("layer manifest " + manifest_path.string() +
                        " must be a non-empty JSON list");
    const fs::path base = manifest_path.parent_path();
    std::vector<LayerEntry> entries;
    std::set<std::string> seen;
    for (const auto& item : root) {
        if (!item.is_object())
            throw DataError("layer manifest entries must be objects with layer_name/feature_path");
        reject_unknown(item, "layer manifest entry", {"layer_name", "feature_path", "modality_tag"});
        LayerEntry e;
        e.name = item.value("layer_name", "");
        const std::string rel = item.value("feature_path", "");
        if (e.name.empty() || rel.empty())
            throw DataError("layer manifest entry needs layer_name and feature_path");
        if (!seen.insert(e.name).second)
            throw DataError("layer manifest repeats layer_name '" + e.name + "'");
        fs::path p(rel);
        e.path = p.is_absolute() ? p : base / p;
        if (!fs::exists(e.path))
            throw DataError("layer manifest: feature file not found: " + e.path.string());
        e.tag = item.value("modality_tag", "");
        entries.push_back(std::move(e));
    }
    return entries;
}

// ---------------------------------------------------------------------------
// run context: input tracking + execution manifest

struct RunContext {
    std::string subcommand;
    fs::path out;
    json flags = json::object();
    json config_snapshot;
    std::string config_dir;
    std::map<std::string, std::string> inputs;

    void note_input(const fs::path& p) { inputs[fs::absolute(p).string()] = hash_file(p); }

    void note_dir(const fs::path& dir) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) note_input(f);
    }

    TimeSeriesMatrix load_matrix_tracked(const fs::path& p) {
        note_input(p);
        return load_matrix(p);
    }

    ClipIndex load_clips_tracked(const fs::path& p) {
        note_input(p);
        return load_clip_index(p);
    }

    std::map<std::string, std::string> hash_outputs() const {
        std::map<std::string, std::string> result;
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(out))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string rel = fs::relative(f, out).generic_string();
            if (rel == "run_manifest.json") continue;
            result[rel] = hash_file(f);
        }
        return result;
    }

    void finish() {
        json manifest;
        manifest["format"] = kRunFormat;
        manifest["version"] = kVersion;
        manifest["subcommand"] = subcommand;
        manifest["flags"] = flags;
        manifest["config_dir"] = config_dir;
        manifest["config"] = config_snapshot;
        manifest["inputs"] = inputs;
        manifest["outputs"] = hash_outputs();
        write_text_file(out / "run_manifest.json", manifest.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// effective command-line flags (also recorded in, and restored from, manifests)

struct Flags {
    std::string config_path;
    std::string out = ".";
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool no_vox2vox = false;
    std::size_t voxel_pca = 0;
    bool has_voxel_pca = false;
    std::string unit;
    std::string method;
    std::string split;
    std::string figure;
    std::vector<std::string> compare;
    std::string manifest_path;
};

json flags_to_json(const Flags& f) {
    json j = json::object();
    if (f.has_seed) j["seed"] = f.seed;
    if (f.no_vox2vox) j["no_vox2vox"] = true;
    if (f.has_voxel_pca) j["voxel_pca"] = f.voxel_pca;
    if (!f.unit.empty()) j["unit"] = f.unit;
    if (!f.method.empty()) j["method"] = f.method;
    if (!f.split.empty()) j["split"] = f.split;
    if (!f.figure.empty()) j["figure"] = f.figure;
    if (!f.compare.empty()) j["compare"] = f.compare;
    return j;
}

Flags flags_from_json(const json& j) {
    Flags f;
    if (j.contains("seed")) {
        f.seed = j.at("seed").get<std::uint64_t>();
        f.has_seed = true;
    }
    f.no_vox2vox = j.value("no_vox2vox", false);
    if (j.contains("voxel_pca")) {
        f.voxel_pca = j.at("voxel_pca").get<std::size_t>();
        f.has_voxel_pca = true;
    }
    f.unit = j.value("unit", "");
    f.method = j.value("method", "");
    f.split = j.value("split", "");
    f.figure = j.value("figure", "");
    if (j.contains("compare")) f.compare = j.at("compare").get<std::vector<std::string>>();
    return f;
}

// ---------------------------------------------------------------------------
// shared pieces

EncoderConfig encoder_config_from(const Config& config) {
    const json& sec = config.section_or_empty("encoder");
    EncoderConfig ec;
    ec.n_pca = get_size(sec, "encoder", "n_pca", ec.n_pca);
    ec.delays = get_delays(sec, "encoder", "delays", ec.delays);
    ec.lambda_grid = get_array<double>(sec, "encoder", "lambda_grid", ec.lambda_grid);
    ec.n_folds = get_size(sec, "encoder", "n_folds", ec.n_folds);
    if (ec.n_folds < 2) field_fail("encoder.n_folds", "must be >= 2");
    return ec;
}

struct DecoderSettings {
    Vox2LabConfig vox2lab;
    bool use_vox2vox = true;
    std::size_t tl_n_pca = 1000;
};

DecoderSettings decoder_settings_from(const Config& config, const Flags& flags) {
    const json& sec = config.section_or_empty("decoder");
    DecoderSettings ds;
    auto leads = get_array<int>(sec, "decoder", "leads", {3, 4, 5});
    ds.vox2lab.leads = std::move(leads);
    ds.vox2lab.lambda_grid = get_array<double>(sec, "decoder", "lambda_grid", ds.vox2lab.lambda_grid);
    ds.vox2lab.n_folds = get_size(sec, "decoder", "n_folds", ds.vox2lab.n_folds);
    if (ds.vox2lab.n_folds < 2) field_fail("decoder.n_folds", "must be >= 2");
    ds.vox2lab.voxel_pca = get_bool(sec, "decoder", "voxel_pca", false);
    ds.vox2lab.n_voxel_pca = get_size(sec, "decoder", "n_voxel_pca", 300);
    ds.use_vox2vox = get_bool(sec, "decoder", "use_vox2vox", true);
    ds.tl_n_pca = get_size(sec, "decoder", "tl_n_pca", 1000);
    if (flags.has_voxel_pca) {
        ds.vox2lab.voxel_pca = true;
        ds.vox2lab.n_voxel_pca = flags.voxel_pca;
    }
    if (flags.no_vox2vox) ds.use_vox2vox = false;
    return ds;
}

Vox2VoxConfig vox2vox_config_from(const Config& config, std::size_t* n_top,
                                  bool voxel_pca_mode) {
    const json& sec = config.section_or_empty("vox2vox");
    Vox2VoxConfig vc;
    vc.delays = get_delays(sec, "vox2vox", "delays", vc.delays);
    vc.lambda_grid = get_array<double>(sec, "vox2vox", "lambda_grid", vc.lambda_grid);
    vc.n_folds = get_size(sec, "vox2vox", "n_folds", vc.n_folds);
    if (vc.n_folds < 2) field_fail("vox2vox.n_folds", "must be >= 2");
    // the compact decoding variant also shrinks the refinement to 10 voxels
    *n_top = get_size(sec, "vox2vox", "n_top_voxels", voxel_pca_mode ? 10 : 2000);
    if (*n_top == 0) field_fail("vox2vox.n_top_voxels", "must be >= 1");
    return vc;
}

const json& data_section(const Config& config) {
    const json& sec = config.section("data");
    return sec;
}

std::vector<TimeSeriesMatrix> load_features(RunContext& ctx, const std::vector<LayerEntry>& entries) {
    std::vector<TimeSeriesMatrix> features;
    features.reserve(entries.size());
    for (const auto& e : entries) features.push_back(ctx.load_matrix_tracked(e.path));
    return features;
}

void check_layer_names(const std::vector<LayerEntry>& entries,
                       const std::vector<LayerEncoder>& layers) {
    if (entries.size() != layers.size())
        throw DataError("layer manifest lists " + std::to_string(entries.size()) +
                        " layers but the model has " + std::to_string(layers.size()));
    for (std::size_t l = 0; l < layers.size(); ++l)
        if (entries[l].name != layers[l].layer_name)
            throw DataError("layer " + std::to_string(l) + " is '" + entries[l].name +
                            "' in the manifest but '" + layers[l].layer_name + "' in the model");
}

// optional clip index from data.train_clips / data.test_clips
std::optional<ClipIndex> maybe_clips(RunContext& ctx, const Config& config, const json& data,
                                     const char* key) {
    if (!has_path(data, key)) return std::nullopt;
    return ctx.load_clips_tracked(get_path(config, data, "data", key));
}

void write_json(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// refinement + weighted combination applied to an encoder prediction
TimeSeriesMatrix refine_prediction(const EncoderEnsemble& encoder, const Vox2VoxModel& vox2vox,
                                   const TimeSeriesMatrix& predicted) {
    auto refined = apply_vox2vox(vox2vox, predicted);
    return combine_predictions(predicted, ensemble_accuracy(encoder), refined,
                               vox2vox.cv_accuracy);
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_synth(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& sec = config.section("synth");
    SynthConfig sc;
    sc.seed = get_u64(sec, "synth", "seed", sc.seed);
    if (flags.has_seed) sc.seed = flags.seed;
    sc.t_train = get_size(sec, "synth", "t_train", sc.t_train);
    sc.t_test = get_size(sec, "synth", "t_test", sc.t_test);
    sc.layer_dims = get_array<std::size_t>(sec, "synth", "layer_dims", sc.layer_dims);
    sc.n_voxels = get_size(sec, "synth", "n_voxels", sc.n_voxels);
    sc.n_labels = get_size(sec, "synth", "n_labels", sc.n_labels);
    sc.drive_delays = get_delays(sec, "synth", "drive_delays", sc.drive_delays);
    sc.label_leads = get_array<int>(sec, "synth", "label_leads", sc.label_leads);
    sc.use_ar = get_bool(sec, "synth", "use_ar", sc.use_ar);
    sc.n_ar_voxels = get_size(sec, "synth", "n_ar_voxels", sc.n_ar_voxels);
    sc.ar_delays = get_delays(sec, "synth", "ar_delays", sc.ar_delays);
    sc.ar_scale = get_double(sec, "synth", "ar_scale", sc.ar_scale);
    sc.noise_sd_response = get_double(sec, "synth", "noise_sd_response", sc.noise_sd_response);
    sc.noise_sd_label = get_double(sec, "synth", "noise_sd_label", sc.noise_sd_label);
    sc.clip_len = get_size(sec, "synth", "clip_len", sc.clip_len);
    const std::string mode = get_string(sec, "synth", "label_mode", "from_responses");
    if (mode == "from_responses") sc.label_mode = LabelMode::from_responses;
    else if (mode == "from_features") sc.label_mode = LabelMode::from_features;
    else field_fail("synth.label_mode", "expected from_responses or from_features");
    sc.feature_layer = get_size(sec, "synth", "feature_layer", sc.feature_layer);

    auto world = generate(sc);
    save_world(world, ctx.out.string());

    // a ready-to-use layer manifest per split saves the caller from writing one
    for (const char* split : {"train", "test"}) {
        json manifest = json::array();
        for (const auto& name : world.layer_names)
            manifest.push_back({{"layer_name", name},
                                {"feature_path", "features_" + std::string(split) + "_" + name + ".emx"},
                                {"modality_tag", "synthetic"}});
        write_json(ctx.out / ("layers_" + std::string(split) + ".json"), manifest);
    }
    std::printf("world: %zu layers, %zu voxels, %zu+%zu rows -> %s\n", world.layer_names.size(),
                sc.n_voxels, sc.t_train, sc.t_test, ctx.out.string().c_str());
}

void cmd_train_encoder(RunContext& ctx, const Config& config) {
    const json& data = data_section(config);
    auto entries = load_layer_manifest(get_path(config, data, "data", "train_features"));
    ctx.note_input(get_path(config, data, "data", "train_features"));
    auto features = load_features(ctx, entries);
    auto responses = ctx.load_matrix_tracked(get_path(config, data, "data", "train_responses"));
    auto clips = maybe_clips(ctx, config, data, "train_clips");

    EncoderConfig ec = encoder_config_from(config);
    if (clips) ec.clips = &*clips;
    std::vector<std::string> names;
    for (const auto& e : entries) names.push_back(e.name);

    auto ensemble = train_encoder_ensemble(names, features, responses, ec);
    save_ensemble(ensemble, (ctx.out / "ensemble").string());

    std::string csv = "layer,voxel,cv_r,weight\n";
    for (std::size_t l = 0; l < ensemble.layers.size(); ++l)
        for (std::size_t v = 0; v < ensemble.layers[l].cv_accuracy.size(); ++v)
            csv += ensemble.layers[l].layer_name + "," + std::to_string(v) + "," +
                   format_double(ensemble.layers[l].cv_accuracy[v]) + "," +
                   format_double(ensemble.weights(v, l)) + "\n";
    write_text_file(ctx.out / "encoder_cv.csv", csv);

    const auto acc = ensemble_accuracy(ensemble);
    double mean = 0.0;
    for (const double a : acc) mean += a;
    std::printf("encoder: %zu layers, %zu voxels, mean weighted cv r %.4f\n",
                ensemble.layers.size(), acc.size(), acc.empty() ? 0.0 : mean / double(acc.size()));
}

void cmd_predict_responses(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& data = data_section(config);
    const json& models = config.section("models");

    const fs::path enc_dir = get_path(config, models, "models", "encoder");
    ctx.note_dir(enc_dir);
    auto ensemble = load_ensemble(enc_dir.string());

    const char* feat_key = (flags.split == "train") ? "train_features" : "test_features";
    auto entries = load_layer_manifest(get_path(config, data, "data", feat_key));
    ctx.note_input(get_path(config, data, "data", feat_key));
    check_layer_names(entries, ensemble.layers);
    auto features = load_features(ctx, entries);

    auto predicted = ensemble_predict(ensemble, features);
    if (models.contains("vox2vox")) {
        const fs::path vv_dir = get_path(config, models, "models", "vox2vox");
        ctx.note_dir(vv_dir);
        auto vox2vox = load_vox2vox(vv_dir.string());
        predicted = refine_prediction(ensemble, vox2vox, predicted);
    }
    save_matrix(predicted, ctx.out / "predicted_responses.emx");
    std::printf("predicted %zu x %zu responses (%s split)\n", predicted.rows(), predicted.cols(),
                flags.split == "train" ? "train" : "test");
}

void cmd_train_vox2vox(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& data = data_section(config);
    const json& models = config.section("models");

    const fs::path enc_dir = get_path(config, models, "models", "encoder");
    ctx.note_dir(enc_dir);
    auto ensemble = load_ensemble(enc_dir.string());
    auto responses = ctx.load_matrix_tracked(get_path(config, data, "data", "train_responses"));
    auto clips = maybe_clips(ctx, config, data, "train_clips");

    const bool pca_mode = decoder_settings_from(config, flags).vox2lab.voxel_pca;
    std::size_t n_top = 0;
    Vox2VoxConfig vc = vox2vox_config_from(config, &n_top, pca_mode);
    if (clips) vc.clips = &*clips;

    const auto accuracy = ensemble_accuracy(ensemble);
    auto selected = select_top_voxels(accuracy, std::min(n_top, accuracy.size()));
    auto model = train_vox2vox(responses, selected, vc);
    save_vox2vox(model, (ctx.out / "vox2vox").string());

    std::string csv = "rank,voxel,cv_r\n";
    for (std::size_t i = 0; i < model.selected_voxels.size(); ++i)
        csv += std::to_string(i) + "," + std::to_string(model.selected_voxels[i]) + "," +
               format_double(model.cv_accuracy[model.selected_voxels[i]]) + "\n";
    write_text_file(ctx.out / "vox2vox_cv.csv", csv);
    std::printf("vox2vox: %zu selected voxels\n", model.selected_voxels.size());
}

void write_decoder_report(const fs::path& out, const std::vector<double>& cv) {
    std::string csv = "dim,cv_r\n";
    for (std::size_t j = 0; j < cv.size(); ++j)
        csv += std::to_string(j) + "," + format_double(cv[j]) + "\n";
    write_text_file(out / "decoder_cv.csv", csv);
}

void cmd_train_decoder(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& data = data_section(config);
    DecoderSettings ds = decoder_settings_from(config, flags);
    auto labels = ctx.load_matrix_tracked(get_path(config, data, "data", "train_labels"));
    auto clips = maybe_clips(ctx, config, data, "train_clips");
    if (clips) ds.vox2lab.clips = &*clips;

    if (flags.method == "btl") {
        const json& models = config.section("models");
        const fs::path enc_dir = get_path(config, models, "models", "encoder");
        ctx.note_dir(enc_dir);

        PipelineBundle bundle;
        bundle.encoder = load_ensemble(enc_dir.string());
        auto entries = load_layer_manifest(get_path(config, data, "data", "train_features"));
        ctx.note_input(get_path(config, data, "data", "train_features"));
        check_layer_names(entries, bundle.encoder.layers);
        auto features = load_features(ctx, entries);

        auto predicted = ensemble_predict(bundle.encoder, features);
        if (ds.use_vox2vox && models.contains("vox2vox")) {
            const fs::path vv_dir = get_path(config, models, "models", "vox2vox");
            ctx.note_dir(vv_dir);
            bundle.vox2vox = load_vox2vox(vv_dir.string());
            predicted = refine_prediction(bundle.encoder, *bundle.vox2vox, predicted);
        }
        bundle.vox2lab = train_vox2lab(predicted, labels, ds.vox2lab);
        save_bundle(bundle, (ctx.out / "bundle").string());
        write_decoder_report(ctx.out, bundle.vox2lab.cv_accuracy);
        std::printf("decoder (btl%s): %zu label dims\n", bundle.vox2vox ? "+vox2vox" : "",
                    bundle.vox2lab.cv_accuracy.size());
    } else if (flags.method == "tl-single" || flags.method == "tl-multi") {
        auto entries = load_layer_manifest(get_path(config, data, "data", "train_features"));
        ctx.note_input(get_path(config, data, "data", "train_features"));
        auto features = load_features(ctx, entries);
        std::vector<std::string> names;
        for (const auto& e : entries) names.push_back(e.name);

        TLConfig tc;
        tc.n_pca = ds.tl_n_pca;
        tc.lambda_grid = ds.vox2lab.lambda_grid;
        tc.n_folds = ds.vox2lab.n_folds;
        if (clips) tc.clips = &*clips;
        const TLMode mode = flags.method == "tl-multi" ? TLMode::multi : TLMode::single;
        auto model = train_tl(names, features, labels, mode, tc);
        save_tl(model, (ctx.out / "tl").string());
        write_decoder_report(ctx.out, ensemble_accuracy(model.ensemble));
        std::printf("decoder (%s): %zu layers, %zu label dims\n", flags.method.c_str(),
                    names.size(), labels.cols());
    } else if (flags.method == "bd") {
        auto responses = ctx.load_matrix_tracked(get_path(config, data, "data", "train_responses"));
        auto model = train_bd(responses, labels, ds.vox2lab);
        save_vox2lab(model, (ctx.out / "bd").string());
        write_decoder_report(ctx.out, model.cv_accuracy);
        std::printf("decoder (bd): %zu label dims\n", model.cv_accuracy.size());
    } else {
        throw ConfigError("train-decoder: unknown --method '" + flags.method + "'");
    }
}

void cmd_estimate(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& data = data_section(config);
    const json& models = config.section("models");
    const std::string method = flags.method.empty() ? "btl" : flags.method;

    TimeSeriesMatrix estimates;
    if (method == "btl") {
        const fs::path dir = get_path(config, models, "models", "bundle");
        ctx.note_dir(dir);
        auto bundle = load_bundle(dir.string());
        auto entries = load_layer_manifest(get_path(config, data, "data", "test_features"));
        ctx.note_input(get_path(config, data, "data", "test_features"));
        check_layer_names(entries, bundle.encoder.layers);
        estimates = run_btl_pipeline(bundle, load_features(ctx, entries));
    } else if (method == "tl") {
        const fs::path dir = get_path(config, models, "models", "tl");
        ctx.note_dir(dir);
        auto model = load_tl(dir.string());
        auto entries = load_layer_manifest(get_path(config, data, "data", "test_features"));
        ctx.note_input(get_path(config, data, "data", "test_features"));
        check_layer_names(entries, model.ensemble.layers);
        estimates = estimate_tl(model, load_features(ctx, entries));
    } else if (method == "bd") {
        const fs::path dir = get_path(config, models, "models", "vox2lab");
        ctx.note_dir(dir);
        auto model = load_vox2lab(dir.string());
        auto responses = ctx.load_matrix_tracked(get_path(config, data, "data", "test_responses"));
        estimates = estimate_labels(model, responses);
    } else {
        throw ConfigError("estimate: unknown --method '" + method + "'");
    }
    save_matrix(estimates, ctx.out / "estimates.emx");
    std::printf("estimates: %zu x %zu (%s)\n", estimates.rows(), estimates.cols(), method.c_str());
}

TimeSeriesMatrix trim_rows(const TimeSeriesMatrix& m, std::size_t head, std::size_t tail,
                           const char* what) {
    if (head + tail >= m.rows())
        throw DataError(std::string(what) + ": trim range removes every row");
    if (head == 0 && tail == 0) return m;
    std::vector<std::size_t> keep;
    for (std::size_t r = head; r < m.rows() - tail; ++r) keep.push_back(r);
    return m.take_rows(keep);
}

void cmd_evaluate(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& sec = config.section("eval");
    const std::size_t head = get_size(sec, "eval", "trim_head_rows", 0);
    const std::size_t tail = get_size(sec, "eval", "trim_tail_rows", 0);
    auto truth = trim_rows(ctx.load_matrix_tracked(get_path(config, sec, "eval", "truth")), head,
                           tail, "eval.truth");

    if (flags.compare.empty()) {
        auto est = trim_rows(ctx.load_matrix_tracked(get_path(config, sec, "eval", "estimates")),
                             head, tail, "eval.estimates");
        auto report = score_columns(est, truth);
        std::string csv = "target,r,defined\n";
        for (std::size_t j = 0; j < report.per_target_r.size(); ++j)
            csv += std::to_string(j) + "," + format_double(report.per_target_r[j]) + "," +
                   (report.defined[j] ? "1" : "0") + "\n";
        write_text_file(ctx.out / "evaluation.csv", csv);
        write_json(ctx.out / "summary.json",
                   {{"mean_r", report.mean_r},
                    {"n_targets", report.per_target_r.size()},
                    {"n_undefined", report.n_undefined},
                    {"n_samples", report.n_samples}});
        std::printf("mean r %.6f over %zu targets (%zu undefined)\n", report.mean_r,
                    report.per_target_r.size(), report.n_undefined);
        return;
    }

    // --compare A B: bootstrap "A beats B" on the shared truth
    auto est_a = trim_rows(ctx.load_matrix_tracked(config.resolve(flags.compare[0])), head, tail,
                           "compare[0]");
    auto est_b = trim_rows(ctx.load_matrix_tracked(config.resolve(flags.compare[1])), head, tail,
                           "compare[1]");
    const std::size_t n_boot = get_size(sec, "eval", "n_boot", 1000);
    std::uint64_t seed = get_u64(sec, "eval", "seed", 1);
    if (flags.has_seed) seed = flags.seed;
    std::string unit_name = get_string(sec, "eval", "unit", "timepoint");
    if (!flags.unit.empty()) unit_name = flags.unit;
    ResampleUnit unit;
    if (unit_name == "timepoint") unit = ResampleUnit::timepoint;
    else if (unit_name == "clip") unit = ResampleUnit::clip;
    else field_fail("eval.unit", "expected timepoint or clip");

    std::optional<ClipIndex> clips;
    if (unit == ResampleUnit::clip) {
        if (head != 0 || tail != 0)
            throw ConfigError("eval: row trimming cannot be combined with clip resampling");
        clips = ctx.load_clips_tracked(get_path(config, sec, "eval", "clips"));
    }
    auto result = bootstrap_compare(truth, est_a, est_b, n_boot, seed, unit,
                                    clips ? &*clips : nullptr);
    const auto report_a = score_columns(est_a, truth);
    const auto report_b = score_columns(est_b, truth);
    write_json(ctx.out / "summary.json", {{"mean_r_a", report_a.mean_r},
                                          {"mean_r_b", report_b.mean_r},
                                          {"observed_diff", result.observed_diff},
                                          {"p_a_gt_b", result.p},
                                          {"n_boot", n_boot},
                                          {"unit", unit_name}});
    std::string csv = "target,r_a,r_b\n";
    for (std::size_t j = 0; j < report_a.per_target_r.size(); ++j)
        csv += std::to_string(j) + "," + format_double(report_a.per_target_r[j]) + "," +
               format_double(report_b.per_target_r[j]) + "\n";
    write_text_file(ctx.out / "evaluation.csv", csv);
    std::printf("mean r: a %.6f, b %.6f; p(a > b) = %.6g\n", report_a.mean_r, report_b.mean_r,
                result.p);
}

void cmd_variability(RunContext& ctx, const Config& config) {
    const json& sec = config.section("variability");
    auto paths_a = get_array<std::string>(sec, "variability", "sources_a", {});
    if (paths_a.size() < 2) field_fail("variability.sources_a", "needs at least 2 matrices");

    auto load_set = [&](const std::vector<std::string>& paths) {
        std::vector<TimeSeriesMatrix> set;
        for (const auto& p : paths) {
            fs::path full = config.resolve(p);
            if (!fs::exists(full))
                throw ConfigError("variability: file not found: " + full.string());
            set.push_back(ctx.load_matrix_tracked(full));
        }
        return set;
    };
    auto v_a = variability_series(load_set(paths_a));

    auto paths_b = get_array<std::string>(sec, "variability", "sources_b", {});
    if (paths_b.empty()) {
        std::string csv = "window,v_a\n";
        for (std::size_t i = 0; i < v_a.size(); ++i)
            csv += std::to_string(i) + "," + format_double(v_a[i]) + "\n";
        write_text_file(ctx.out / "variability.csv", csv);
        std::printf("variability series: %zu windows\n", v_a.size());
        return;
    }
    if (paths_b.size() < 2) field_fail("variability.sources_b", "needs at least 2 matrices");
    auto v_b = variability_series(load_set(paths_b));
    auto test = variability_correlation(v_a, v_b);

    std::string csv = "window,v_a,v_b\n";
    for (std::size_t i = 0; i < v_a.size(); ++i)
        csv += std::to_string(i) + "," + format_double(v_a[i]) + "," + format_double(v_b[i]) + "\n";
    write_text_file(ctx.out / "variability.csv", csv);
    write_json(ctx.out / "summary.json", {{"pearson_r", test.r},
                                          {"spearman_rho", test.rho},
                                          {"t_test_p", test.p},
                                          {"defined", test.defined},
                                          {"n_windows", v_a.size()}});
    std::printf("variability correlation r %.4f (rho %.4f, p %.4g)\n", test.r, test.rho, test.p);
}

void cmd_sweep(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& sec = config.section("sweep");
    auto sizes = get_array<std::size_t>(sec, "sweep", "sizes", {});
    if (sizes.empty()) field_fail("sweep.sizes", "needs at least one size");
    const std::size_t n_seeds = get_size(sec, "sweep", "n_seeds", 10);
    std::uint64_t seed = get_u64(sec, "sweep", "seed", 1);
    if (flags.has_seed) seed = flags.seed;
    const std::string method = get_string(sec, "sweep", "method", "bd");

    const json& data = data_section(config);
    auto train_labels = ctx.load_matrix_tracked(get_path(config, data, "data", "train_labels"));
    auto test_labels = ctx.load_matrix_tracked(get_path(config, data, "data", "test_labels"));
    auto clips = ctx.load_clips_tracked(get_path(config, data, "data", "train_clips"));
    DecoderSettings ds = decoder_settings_from(config, flags);

    // x/y pairs and a trainer closure per method; features concatenate into a
    // single design so the sweep can subsample rows uniformly
    TimeSeriesMatrix x_train, x_test;
    SweepTrainer trainer;
    if (method == "bd") {
        x_train = ctx.load_matrix_tracked(get_path(config, data, "data", "train_responses"));
        x_test = ctx.load_matrix_tracked(get_path(config, data, "data", "test_responses"));
        trainer = [&ds](const TimeSeriesMatrix& xs, const TimeSeriesMatrix& ys,
                        const TimeSeriesMatrix& xt, const TimeSeriesMatrix& yt) {
            Vox2LabConfig cfg = ds.vox2lab;
            cfg.clips = nullptr;
            auto model = train_vox2lab(xs, ys, cfg);
            return score_columns(estimate_labels(model, xt), yt).mean_r;
        };
    } else if (method == "tl-single" || method == "tl-multi") {
        auto concat_layers = [&](const char* key) {
            auto entries = load_layer_manifest(get_path(config, data, "data", key));
            ctx.note_input(get_path(config, data, "data", key));
            auto features = load_features(ctx, entries);
            std::size_t cols = 0;
            for (const auto& f : features) cols += f.cols();
            TimeSeriesMatrix all(features[0].rows(), cols);
            std::size_t at = 0;
            for (const auto& f : features) {
                if (f.rows() != all.rows())
                    throw DataError("sweep: layer row counts disagree");
                for (std::size_t r = 0; r < f.rows(); ++r)
                    for (std::size_t c = 0; c < f.cols(); ++c) all(r, at + c) = f(r, c);
                at += f.cols();
            }
            return all;
        };
        x_train = concat_layers("train_features");
        x_test = concat_layers("test_features");
        const TLMode mode = method == "tl-multi" ? TLMode::multi : TLMode::single;
        TLConfig tc;
        tc.n_pca = ds.tl_n_pca;
        tc.lambda_grid = ds.vox2lab.lambda_grid;
        tc.n_folds = ds.vox2lab.n_folds;
        trainer = [mode, tc](const TimeSeriesMatrix& xs, const TimeSeriesMatrix& ys,
                             const TimeSeriesMatrix& xt, const TimeSeriesMatrix& yt) {
            auto model = train_tl({"all"}, {xs}, ys, mode, tc);
            return score_columns(estimate_tl(model, {xt}), yt).mean_r;
        };
    } else {
        field_fail("sweep.method", "expected bd, tl-single, or tl-multi");
    }

    auto rows = sample_size_sweep(x_train, train_labels, clips, x_test, test_labels, sizes,
                                  n_seeds, seed, trainer);
    std::string csv = "size,mean_r,sd_r\n";
    json jrows = json::array();
    for (const auto& row : rows) {
        csv += std::to_string(row.size) + "," + format_double(row.mean_r) + "," +
               format_double(row.sd_r) + "\n";
        jrows.push_back({{"size", row.size}, {"mean_r", row.mean_r}, {"sd_r", row.sd_r}});
    }
    write_text_file(ctx.out / "sweep.csv", csv);
    write_json(ctx.out / "summary.json",
               {{"method", method}, {"n_seeds", n_seeds}, {"rows", jrows}});
    std::printf("sweep (%s): %zu sizes x %zu seeds\n", method.c_str(), sizes.size(), n_seeds);
}

void cmd_plot_data(RunContext& ctx, const Config& config, const Flags& flags) {
    const json& sec = config.section("plot");
    const fs::path source = get_path(config, sec, "plot", "source");
    ctx.note_input(source);

    if (flags.figure == "sweep") {
        json summary;
        try {
            summary = json::parse(read_text_file(source));
        } catch (const json::exception& e) {
            throw DataError("plot.source: " + std::string(e.what()));
        }
        if (!summary.contains("rows"))
            throw DataError("plot.source: expected a sweep summary with a 'rows' list");
        std::string csv = "size,mean_r,sd_r,lo,hi\n";
        for (const auto& row : summary.at("rows")) {
            const double mean = row.at("mean_r").get<double>();
            const double sd = row.at("sd_r").get<double>();
            csv += std::to_string(row.at("size").get<std::size_t>()) + "," +
                   format_double(mean) + "," + format_double(sd) + "," +
                   format_double(mean - sd) + "," + format_double(mean + sd) + "\n";
        }
        write_text_file(ctx.out / "figure_sweep.csv", csv);
        std::printf("figure data: %s\n", (ctx.out / "figure_sweep.csv").string().c_str());
        return;
    }

    // variability scatter: one point per window, x from the first series
    std::ifstream in(source);
    std::string line;
    if (!std::getline(in, line) || line.rfind("window,v_a,v_b", 0) != 0)
        throw DataError("plot.source: expected a variability CSV with columns window,v_a,v_b");
    std::string csv = "window,x,y\n";
    while (std::getline(in, line)) {
        if (!line.empty()) csv += line + "\n";
    }
    write_text_file(ctx.out / "figure_variability.csv", csv);
    std::printf("figure data: %s\n", (ctx.out / "figure_variability.csv").string().c_str());
}

// ---------------------------------------------------------------------------
// dispatch + replay

void run_subcommand(const std::string& name, RunContext& ctx, const Config& config,
                    const Flags& flags) {
    if (name == "synth") cmd_synth(ctx, config, flags);
    else if (name == "train-encoder") cmd_train_encoder(ctx, config);
    else if (name == "predict-responses") cmd_predict_responses(ctx, config, flags);
    else if (name == "train-vox2vox") cmd_train_vox2vox(ctx, config, flags);
    else if (name == "train-decoder") cmd_train_decoder(ctx, config, flags);
    else if (name == "estimate") cmd_estimate(ctx, config, flags);
    else if (name == "evaluate") cmd_evaluate(ctx, config, flags);
    else if (name == "variability") cmd_variability(ctx, config);
    else if (name == "sweep") cmd_sweep(ctx, config, flags);
    else if (name == "plot-data") cmd_plot_data(ctx, config, flags);
    else throw ConfigError("unknown subcommand: " + name);
    ctx.finish();
}

int cmd_replay(const std::string& manifest_path) {
    if (!fs::exists(manifest_path)) throw ConfigError("manifest not found: " + manifest_path);
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("manifest " + manifest_path + ": " + e.what());
    }
    if (manifest.value("format", "") != kRunFormat)
        throw DataError("manifest " + manifest_path + " is not an execution manifest");
    if (manifest.value("version", "") != kVersion)
        log_warn("manifest was written by toolkit version " + manifest.value("version", "?") +
                 ", this is " + kVersion);

    std::vector<std::string> problems;
    for (const auto& [path, hash] : manifest.at("inputs").items()) {
        if (!fs::exists(path)) {
            problems.push_back("missing input: " + path);
        } else if (hash_file(path) != hash.get<std::string>()) {
            problems.push_back("input changed: " + path);
        }
    }
    if (!problems.empty()) {
        for (const auto& p : problems) log_error(p);
        throw DataError("replay: " + std::to_string(problems.size()) + " input(s) differ");
    }

    const fs::path tmp = fs::temp_directory_path() /
                         ("encpipe_replay_" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    RunContext ctx;
    ctx.subcommand = manifest.at("subcommand").get<std::string>();
    ctx.out = tmp;
    ctx.flags = manifest.value("flags", json::object());
    ctx.config_snapshot = manifest.value("config", json::object());
    ctx.config_dir = manifest.value("config_dir", "/");
    Flags flags = flags_from_json(ctx.flags);
    Config config = Config::from_snapshot(ctx.config_snapshot, fs::path(ctx.config_dir));

    std::map<std::string, std::string> produced;
    try {
        run_subcommand(ctx.subcommand, ctx, config, flags);
        produced = ctx.hash_outputs();
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    std::error_code ec;
    fs::remove_all(tmp, ec);

    std::map<std::string, std::string> recorded;
    for (const auto& [rel, hash] : manifest.at("outputs").items())
        recorded[rel] = hash.get<std::string>();
    std::vector<std::string> diffs;
    for (const auto& [rel, hash] : recorded) {
        auto it = produced.find(rel);
        if (it == produced.end()) diffs.push_back("not reproduced: " + rel);
        else if (it->second != hash) diffs.push_back("differs: " + rel);
    }
    for (const auto& [rel, hash] : produced) {
        (void)hash;
        if (!recorded.count(rel)) diffs.push_back("extra artifact: " + rel);
    }
    if (!diffs.empty()) {
        for (const auto& d : diffs) log_error(d);
        throw DataError("replay: " + std::to_string(diffs.size()) + " artifact(s) differ");
    }
    std::printf("replay ok: %zu artifacts match\n", recorded.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Flags flags;
    CLI::App app{"pipeline toolkit for feature -> response -> label modeling"};
    app.require_subcommand(1);

    app.add_option("--config", flags.config_path, "JSON config file");
    app.add_option("--out", flags.out, "output directory (default: current)");
    app.add_option("--threads", flags.threads, "worker threads (default: all cores)");
    auto* seed_opt = app.add_option("--seed", flags.seed, "override the config seed");
    app.add_flag("--no-vox2vox", flags.no_vox2vox, "skip the response refinement stage");
    auto* vpca_opt = app.add_option("--voxel-pca", flags.voxel_pca,
                                    "compact decoding: response PCA with this many components");
    app.add_option("--unit", flags.unit, "bootstrap resampling unit")
        ->check(CLI::IsMember({"timepoint", "clip"}));

    const char* names[] = {"synth",        "train-encoder", "predict-responses",
                           "train-vox2vox", "train-decoder", "estimate",
                           "evaluate",     "variability",   "sweep",
                           "plot-data"};
    const char* descs[] = {"generate a synthetic world",
                           "fit per-layer encoders and their ensemble",
                           "apply an encoder (and optional refinement) to features",
                           "fit the response refinement model",
                           "fit a label decoder (btl, tl-single, tl-multi, or bd)",
                           "run a trained decoder on held-out data",
                           "score estimates against truth, optionally bootstrap-compare two",
                           "windowed variability series and cross-set correlation",
                           "accuracy as a function of training-set size",
                           "reshape sweep/variability outputs into figure-ready CSV"};
    CLI::App* subs[10];
    for (int i = 0; i < 10; ++i) {
        subs[i] = app.add_subcommand(names[i], descs[i]);
        subs[i]->fallthrough();
    }
    subs[2]->add_option("--split", flags.split, "feature split to predict (train|test)")
        ->check(CLI::IsMember({"train", "test"}));
    subs[4]
        ->add_option("--method", flags.method, "decoder family")
        ->required()
        ->check(CLI::IsMember({"btl", "tl-single", "tl-multi", "bd"}));
    subs[5]->add_option("--method", flags.method, "decoder family (default btl)")
        ->check(CLI::IsMember({"btl", "tl", "bd"}));
    subs[6]->add_option("--compare", flags.compare, "two estimate matrices to bootstrap-compare")
        ->expected(2);
    subs[9]
        ->add_option("--figure", flags.figure, "which figure data to emit")
        ->required()
        ->check(CLI::IsMember({"sweep", "variability"}));
    auto* replay = app.add_subcommand("replay", "re-execute a run manifest and diff the artifacts");
    replay->fallthrough();
    replay->add_option("--manifest", flags.manifest_path, "run_manifest.json to replay")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    flags.has_seed = seed_opt->count() > 0;
    flags.has_voxel_pca = vpca_opt->count() > 0;

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "replay") {
            set_thread_count(flags.threads > 0 ? flags.threads
                                               : std::max(1u, std::thread::hardware_concurrency()));
            return cmd_replay(flags.manifest_path);
        }

        Config config = Config::from_file(flags.config_path);
        unsigned threads = flags.threads > 0 ? flags.threads : config.threads_hint();
        set_thread_count(threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()));
        RunContext ctx;
        ctx.subcommand = sub;
        ctx.out = fs::absolute(fs::path(flags.out));
        ctx.flags = flags_to_json(flags);
        ctx.config_snapshot = config.root();
        ctx.config_dir = config.base_dir().string();
        fs::create_directories(ctx.out);
        run_subcommand(sub, ctx, config, flags);
        return 0;
    } catch (const ConfigError& e) {
        log_error(e.what());
        return 2;
    } catch (const DataError& e) {
        log_error(e.what());
        return 3;
    } catch (const NumericError& e) {
        log_error(e.what());
        return 4;
    } catch (const std::exception& e) {
        log_error(std::string("unexpected: ") + e.what());
        return 1;
    }
}
