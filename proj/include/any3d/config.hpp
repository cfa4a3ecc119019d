#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "any3d/alignment.hpp"
#include "any3d/compression.hpp"
#include "any3d/datapipe.hpp"
#include "any3d/fusion.hpp"
#include "any3d/geometry.hpp"

namespace any3d {

struct SynthConfig {
    int trajectories = 1;
    int frames_per_trajectory = 1;
};

struct GradcheckConfig {
    int draws = 5;
    int patches = 4;
    double step = 1e-5;
    double tolerance = 1e-4;
};

// Every tunable of the pipeline in one record. JSON keys mirror the field
// groups; omitted keys keep their defaults and unknown keys are rejected.
struct PipelineConfig {
    std::uint64_t seed = 0;
    CameraIntrinsics camera{200.0, 200.0, 128.0, 128.0, 256, 256};
    CropSpec crop;
    VoxelSpec voxel;
    int normal_neighbors = kDefaultNormalNeighbors;
    PatchGrid patch_grid;
    fusion::FusionDims fusion_dims;
    double gate = fusion::kGateInit;
    double ln_eps = fusion::kLayerNormEps;
    std::uint64_t fusion_seed = 1;
    std::uint64_t encoder_seed = 2;
    datapipe::SourceMix mix = datapipe::SourceMix::hybrid_default();
    SynthConfig synth;
    GradcheckConfig gradcheck;

    void validate() const;

    nlohmann::ordered_json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);
};

}  // namespace any3d
