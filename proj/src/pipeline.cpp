#include "any3d/pipeline.hpp"

#include <chrono>

#include "any3d/error.hpp"
#include "any3d/objectives.hpp"
#include "any3d/rng.hpp"

namespace any3d {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

LiftCompressResult lift_compress(const PipelineConfig& config, const RgbImage& rgb, const DepthImage& depth,
                                 const CameraIntrinsics& intr) {
    LiftCompressResult out;
    auto t0 = std::chrono::steady_clock::now();
    const PointCloud lifted = lift_frame(intr, rgb, depth);
    out.timings.lift_ms = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    PointCloud cropped = crop_cloud(lifted, config.crop);
    out.timings.crop_ms = elapsed_ms(t0);
    if (cropped.empty()) throw PreconditionError("empty cloud");
    // Carry float32 positions from here on, exactly what the PLY stores, so
    // recompressing a written dense cloud reproduces the same voxels.
    round_to_float32(cropped.coords);
    require(cropped.size() >= static_cast<std::size_t>(config.normal_neighbors),
            "empty cloud: fewer points than normals.k after cropping");

    t0 = std::chrono::steady_clock::now();
    NormalEstimate est = estimate_normals(cropped, config.normal_neighbors);
    out.timings.normals_ms = elapsed_ms(t0);
    out.degenerate_normals = est.degenerate.size();
    out.dense = std::move(est.cloud);

    t0 = std::chrono::steady_clock::now();
    out.compressed = compress(out.dense, config.voxel);
    out.timings.compress_ms = elapsed_ms(t0);
    return out;
}

std::vector<float> initial_empty_token(std::size_t d3, std::uint64_t seed) {
    CounterRng rng(hash_combine(seed, 0xe3d));
    std::vector<float> e(d3);
    for (float& v : e) v = static_cast<float>(0.02 * rng.normal());
    return e;
}

fusion::FusionParams config_params(const PipelineConfig& config) {
    auto p = fusion::init_params(config.fusion_dims, config.fusion_seed);
    p.gate = config.gate;
    p.ln_eps = config.ln_eps;
    return p;
}

AlignFuseResult align_fuse(const PipelineConfig& config, const AlignFuseInputs& in) {
    require(in.compressed && in.rgb, "align_fuse: compressed cloud and image are required");
    const PatchGrid& grid = config.patch_grid;
    const std::size_t d3 = config.fusion_dims.d3;
    const CameraIntrinsics grid_camera = in.camera.resized(grid.image_width, grid.image_height);

    AlignFuseResult out;
    if (in.imported_2d) {
        require(in.imported_2d->rows == grid.rows && in.imported_2d->cols == grid.cols &&
                    in.imported_2d->dim == config.fusion_dims.dtok,
                "align_fuse: imported 2D tokens do not match the patch grid and dtok");
        out.h2d = *in.imported_2d;
    } else {
        const RgbImage resized = objectives::resize_bilinear(*in.rgb, grid.image_width, grid.image_height);
        out.h2d = fusion::stub_encode_2d(resized, grid, config.fusion_dims.dtok, config.encoder_seed);
    }

    const CompressedCloud& comp = *in.compressed;
    if (in.imported_3d) {
        require(in.imported_3d->size() == comp.size() * d3,
                "align_fuse: imported 3D features need one row of d3 values per representative");
        out.point_features = *in.imported_3d;
    } else {
        out.point_features = fusion::stub_encode_3d(comp.representatives, d3, config.encoder_seed);
    }

    out.assignments = assign_patches(grid, grid_camera, comp);
    const auto empty_token = initial_empty_token(d3, config.encoder_seed);
    out.patch_features = scatter_mean(out.assignments, out.point_features, d3, grid, empty_token);
    out.empty_fraction = static_cast<double>(out.patch_features.empty_count()) /
                         static_cast<double>(out.patch_features.size());

    const fusion::FusionParams params = in.params ? *in.params : config_params(config);
    params.validate();
    require(params.dims == config.fusion_dims, "align_fuse: parameter dims differ from the config");
    out.h3d = fusion::project_3d_tokens(fusion::tokens_from_patch_features(out.patch_features), params);
    out.fused = fusion::fuse(out.h2d, out.h3d, params);
    return out;
}

}  // namespace any3d
