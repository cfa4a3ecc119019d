#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "any3d/alignment.hpp"
#include "any3d/compression.hpp"
#include "any3d/config.hpp"
#include "any3d/datapipe.hpp"
#include "any3d/fusion.hpp"
#include "any3d/geometry.hpp"

namespace any3d {

struct StageTimings {
    double lift_ms = 0.0;
    double crop_ms = 0.0;
    double normals_ms = 0.0;
    double compress_ms = 0.0;
};

struct LiftCompressResult {
    PointCloud dense;  // cropped, with normals
    CompressedCloud compressed;
    std::size_t degenerate_normals = 0;
    StageTimings timings;
};

// lift -> crop -> normals -> compress. Throws PreconditionError("empty cloud")
// when no valid point survives.
LiftCompressResult lift_compress(const PipelineConfig& config, const RgbImage& rgb, const DepthImage& depth,
                                 const CameraIntrinsics& intr);

struct AlignFuseInputs {
    const CompressedCloud* compressed = nullptr;
    const RgbImage* rgb = nullptr;                       // at camera resolution
    CameraIntrinsics camera;
    const fusion::TokenSequence* imported_2d = nullptr;  // replaces the 2D stub
    const std::vector<float>* imported_3d = nullptr;     // M x d3, replaces the 3D stub
    const fusion::FusionParams* params = nullptr;        // replaces seeded init
};

struct AlignFuseResult {
    std::vector<std::uint32_t> assignments;
    std::vector<float> point_features;  // M x d3
    PatchFeatureGrid patch_features;
    fusion::TokenSequence h2d;
    fusion::TokenSequence h3d;
    fusion::TokenSequence fused;
    double empty_fraction = 0.0;
};

// The learnable empty token's seeded initial value.
std::vector<float> initial_empty_token(std::size_t d3, std::uint64_t seed);

// Parameters from the config: seeded init with the configured gate and ln_eps.
fusion::FusionParams config_params(const PipelineConfig& config);

AlignFuseResult align_fuse(const PipelineConfig& config, const AlignFuseInputs& inputs);

struct GradcheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

struct GradcheckReport {
    std::vector<GradcheckBlock> params;  // one entry per FusionParams field
    std::vector<GradcheckBlock> inputs;  // h2d, h3d, g3d, empty_token
    std::vector<GradcheckBlock> losses;  // flow-matching loss gradient
    double tolerance = 1e-4;
    int draws = 0;

    bool pass() const;
    double max_rel_err() const;
};

struct GradcheckOptions {
    fusion::FusionDims dims{8, 6, 16};
    int patches = 4;
    int draws = 100;
    double step = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    // Test hook: scale the analytic W_3D gradient by 1.01 before comparing.
    bool corrupt_analytic = false;
};

// Relative error with the denominator floored at this magnitude.
constexpr double kGradcheckFloor = 1e-6;

double relative_error(double analytic, double numeric);

// Analytic fusion and flow-loss gradients against central finite differences
// evaluated in long double.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace any3d
