#pragma once

#include <string>

#include "encpipe/decoder.hpp"
#include "encpipe/encoder.hpp"
#include "encpipe/regress.hpp"
#include "encpipe/voxnet.hpp"

namespace encpipe {

// Every model persists as a directory: matrices in EMX, everything else in a
// meta.json sidecar with a format tag.  Loaders reject unknown tags.

void save_ridge(const RidgeModel& model, const std::string& dir);
RidgeModel load_ridge(const std::string& dir);

void save_pca(const PCAModel& model, const std::string& dir);
PCAModel load_pca(const std::string& dir);

void save_ensemble(const EncoderEnsemble& ens, const std::string& dir);
EncoderEnsemble load_ensemble(const std::string& dir);

void save_vox2vox(const Vox2VoxModel& model, const std::string& dir);
Vox2VoxModel load_vox2vox(const std::string& dir);

void save_vox2lab(const Vox2LabModel& model, const std::string& dir);
Vox2LabModel load_vox2lab(const std::string& dir);

void save_tl(const TLModel& model, const std::string& dir);
TLModel load_tl(const std::string& dir);

void save_bundle(const PipelineBundle& bundle, const std::string& dir);
PipelineBundle load_bundle(const std::string& dir);

} // namespace encpipe
