#include "encpipe/serialize.hpp"

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "encpipe/error.hpp"
#include "encpipe/io.hpp"

namespace encpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_meta(const fs::path& dir, const std::string& expected_format) {
    const auto path = dir / "meta.json";
    json meta;
    try {
        meta = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!meta.is_object() || meta.value("format", "") != expected_format)
        throw DataError(path.string() + ": expected format tag '" + expected_format + "'");
    return meta;
}

void write_meta(const fs::path& dir, const json& meta) {
    fs::create_directories(dir);
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

std::vector<double> doubles_field(const json& meta, const fs::path& dir, const char* key) {
    if (!meta.contains(key) || !meta[key].is_array())
        throw DataError((dir / "meta.json").string() + ": missing array '" + key + "'");
    return meta[key].get<std::vector<double>>();
}

json ridge_meta(const RidgeModel& model) {
    return json{{"lambdas", model.lambdas},
                {"cv_scores", model.cv_scores},
                {"min_norm", model.min_norm}};
}

void write_ridge_parts(const RidgeModel& model, const fs::path& dir) {
    save_matrix(model.weights, dir / "ridge_weights.emx");
}

RidgeModel read_ridge_parts(const json& meta, const fs::path& dir) {
    RidgeModel model;
    model.weights = load_matrix(dir / "ridge_weights.emx");
    model.lambdas = doubles_field(meta, dir, "lambdas");
    model.cv_scores = doubles_field(meta, dir, "cv_scores");
    model.min_norm = meta.value("min_norm", false);
    return model;
}

json pca_meta(const PCAModel& model) {
    return json{{"means", model.means}, {"explained_variance", model.explained_variance}};
}

void write_pca_parts(const PCAModel& model, const fs::path& dir) {
    save_matrix(model.components, dir / "pca_components.emx");
}

PCAModel read_pca_parts(const json& meta, const fs::path& dir) {
    PCAModel model;
    model.components = load_matrix(dir / "pca_components.emx");
    model.means = doubles_field(meta, dir, "means");
    model.explained_variance = doubles_field(meta, dir, "explained_variance");
    if (model.components.cols() != model.means.size())
        throw DataError(dir.string() + ": component width does not match the means vector");
    return model;
}

std::vector<int> ints_field(const json& meta, const fs::path& dir, const char* key) {
    if (!meta.contains(key) || !meta[key].is_array())
        throw DataError((dir / "meta.json").string() + ": missing array '" + key + "'");
    return meta[key].get<std::vector<int>>();
}

void save_layer(const LayerEncoder& enc, const fs::path& dir) {
    json meta{{"format", "encpipe-layer-v1"},
              {"layer_name", enc.layer_name},
              {"delays", enc.delays.delays()},
              {"cv_accuracy", enc.cv_accuracy},
              {"pca", pca_meta(enc.pca)},
              {"ridge", ridge_meta(enc.ridge)}};
    write_meta(dir, meta);
    write_pca_parts(enc.pca, dir);
    write_ridge_parts(enc.ridge, dir);
}

LayerEncoder load_layer(const fs::path& dir) {
    const auto meta = load_meta(dir, "encpipe-layer-v1");
    LayerEncoder enc;
    enc.layer_name = meta.value("layer_name", "");
    enc.delays = DelaySpec(ints_field(meta, dir, "delays"));
    enc.cv_accuracy = doubles_field(meta, dir, "cv_accuracy");
    enc.pca = read_pca_parts(meta.at("pca"), dir);
    enc.ridge = read_ridge_parts(meta.at("ridge"), dir);
    return enc;
}

} // namespace

void save_ridge(const RidgeModel& model, const std::string& dir) {
    json meta = ridge_meta(model);
    meta["format"] = "encpipe-ridge-v1";
    write_meta(dir, meta);
    write_ridge_parts(model, dir);
}

RidgeModel load_ridge(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-ridge-v1");
    return read_ridge_parts(meta, dir);
}

void save_pca(const PCAModel& model, const std::string& dir) {
    json meta = pca_meta(model);
    meta["format"] = "encpipe-pca-v1";
    write_meta(dir, meta);
    write_pca_parts(model, dir);
}

PCAModel load_pca(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-pca-v1");
    return read_pca_parts(meta, dir);
}

void save_ensemble(const EncoderEnsemble& ens, const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& layer : ens.layers) names.push_back(layer.layer_name);
    json meta{{"format", "encpipe-ensemble-v1"}, {"layers", names}};
    write_meta(dir, meta);
    save_matrix(ens.weights, fs::path(dir) / "weights.emx");
    for (const auto& layer : ens.layers) save_layer(layer, fs::path(dir) / layer.layer_name);
}

EncoderEnsemble load_ensemble(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-ensemble-v1");
    if (!meta.contains("layers") || !meta["layers"].is_array())
        throw DataError(dir + "/meta.json: missing 'layers' list");
    EncoderEnsemble ens;
    for (const auto& name : meta["layers"])
        ens.layers.push_back(load_layer(fs::path(dir) / name.get<std::string>()));
    ens.weights = load_matrix(fs::path(dir) / "weights.emx");
    if (!ens.layers.empty() && ens.weights.cols() != ens.layers.size())
        throw DataError(dir + ": weight columns do not match the layer count");
    return ens;
}

void save_vox2vox(const Vox2VoxModel& model, const std::string& dir) {
    json meta{{"format", "encpipe-vox2vox-v1"},
              {"selected_voxels", model.selected_voxels},
              {"delays", model.delays.delays()},
              {"cv_accuracy", model.cv_accuracy},
              {"ridge", ridge_meta(model.ridge)}};
    write_meta(dir, meta);
    write_ridge_parts(model.ridge, dir);
}

Vox2VoxModel load_vox2vox(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-vox2vox-v1");
    Vox2VoxModel model;
    if (!meta.contains("selected_voxels") || !meta["selected_voxels"].is_array())
        throw DataError(dir + "/meta.json: missing 'selected_voxels'");
    model.selected_voxels = meta["selected_voxels"].get<std::vector<std::size_t>>();
    model.delays = DelaySpec(ints_field(meta, dir, "delays"));
    model.cv_accuracy = doubles_field(meta, dir, "cv_accuracy");
    model.ridge = read_ridge_parts(meta.at("ridge"), dir);
    return model;
}

void save_vox2lab(const Vox2LabModel& model, const std::string& dir) {
    json meta{{"format", "encpipe-vox2lab-v1"},
              {"delays", model.delays.delays()},
              {"cv_accuracy", model.cv_accuracy},
              {"ridge", ridge_meta(model.ridge)},
              {"has_voxel_pca", model.voxel_pca.has_value()}};
    if (model.voxel_pca) meta["voxel_pca"] = pca_meta(*model.voxel_pca);
    write_meta(dir, meta);
    write_ridge_parts(model.ridge, dir);
    if (model.voxel_pca) write_pca_parts(*model.voxel_pca, dir);
}

Vox2LabModel load_vox2lab(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-vox2lab-v1");
    Vox2LabModel model;
    model.delays = DelaySpec(ints_field(meta, dir, "delays"));
    model.cv_accuracy = doubles_field(meta, dir, "cv_accuracy");
    model.ridge = read_ridge_parts(meta.at("ridge"), dir);
    if (meta.value("has_voxel_pca", false))
        model.voxel_pca = read_pca_parts(meta.at("voxel_pca"), dir);
    return model;
}

void save_tl(const TLModel& model, const std::string& dir) {
    json meta{{"format", "encpipe-tl-v1"},
              {"mode", model.mode == TLMode::multi ? "multi" : "single"}};
    write_meta(dir, meta);
    save_ensemble(model.ensemble, (fs::path(dir) / "ensemble").string());
}

TLModel load_tl(const std::string& dir) {
    const auto meta = load_meta(dir, "encpipe-tl-v1");
    TLModel model;
    const auto mode = meta.value("mode", "");
    if (mode == "single")
        model.mode = TLMode::single;
    else if (mode == "multi")
        model.mode = TLMode::multi;
    else
        throw DataError(dir + "/meta.json: unknown mode '" + mode + "'");
    model.ensemble = load_ensemble((fs::path(dir) / "ensemble").string());
    return model;
}

void save_bundle(const PipelineBundle& bundle, const std::string& dir) {
    json meta{{"format", "encpipe-bundle-v1"},
              {"encoder", "encoder"},
              {"vox2lab", "vox2lab"}};
    meta["vox2vox"] = bundle.vox2vox ? json("vox2vox") : json(nullptr);
    fs::create_directories(dir);
    write_text_file(fs::path(dir) / "bundle.json", meta.dump(2) + "\n");
    save_ensemble(bundle.encoder, (fs::path(dir) / "encoder").string());
    if (bundle.vox2vox) save_vox2vox(*bundle.vox2vox, (fs::path(dir) / "vox2vox").string());
    save_vox2lab(bundle.vox2lab, (fs::path(dir) / "vox2lab").string());
}

PipelineBundle load_bundle(const std::string& dir) {
    const auto path = fs::path(dir) / "bundle.json";
    json meta;
    try {
        meta = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!meta.is_object() || meta.value("format", "") != "encpipe-bundle-v1")
        throw DataError(path.string() + ": expected format tag 'encpipe-bundle-v1'");

    PipelineBundle bundle;
    bundle.encoder = load_ensemble((fs::path(dir) / meta.value("encoder", "encoder")).string());
    if (meta.contains("vox2vox") && !meta["vox2vox"].is_null())
        bundle.vox2vox =
            load_vox2vox((fs::path(dir) / meta["vox2vox"].get<std::string>()).string());
    bundle.vox2lab = load_vox2lab((fs::path(dir) / meta.value("vox2lab", "vox2lab")).string());
    return bundle;
}

} // namespace encpipe
