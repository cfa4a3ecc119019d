#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "any3d/compression.hpp"
#include "any3d/geometry.hpp"

namespace any3d {

// Regular patch grid over an image_width x image_height image. Patch j covers
// rows [r * patch_px, (r + 1) * patch_px) with j = r * cols + c (row-major).
struct PatchGrid {
    int rows = 16;
    int cols = 16;
    int patch_px = 14;
    int image_width = 224;
    int image_height = 224;

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    void validate() const;

    // Smallest grid of patch_px patches covering the image.
    static PatchGrid covering(int image_width, int image_height, int patch_px);

    bool operator==(const PatchGrid&) const = default;
};

// Projected coordinates within this many pixels of an integer snap to it, so
// points lifted from pixel (u, v) land in that pixel's patch despite rounding
// in the lift/project roundtrip and float32 storage.
constexpr double kPixelSnap = 1e-3;

// Linear patch index of every point: project, floor by patch_px, clamp to the
// border patch, linearize row-major.
std::vector<std::uint32_t> assign_patches(const PatchGrid& grid, const CameraIntrinsics& intr,
                                          std::span<const Eigen::Vector3d> points,
                                          const simd::KernelTable& kernels = simd::active_kernels());

inline std::vector<std::uint32_t> assign_patches(const PatchGrid& grid, const CameraIntrinsics& intr,
                                                 const CompressedCloud& comp) {
    return assign_patches(grid, intr, comp.representatives.coords);
}

// Patch-level 3D features: mean of the features assigned to each patch, or
// the empty token bit for bit when none are.
struct PatchFeatureGrid {
    int rows = 0;
    int cols = 0;
    std::size_t dim = 0;
    std::vector<float> features;       // rows * cols * dim, row-major
    std::vector<std::uint8_t> empty_mask;  // rows * cols
    std::vector<float> empty_token;    // dim

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    std::span<const float> row(std::size_t j) const {
        return std::span<const float>(features).subspan(j * dim, dim);
    }
    std::size_t empty_count() const;
    void validate() const;
};

// feats holds one row of `dim` values per assignment. Sums run in double in
// input order per patch; means are stored as float.
PatchFeatureGrid scatter_mean(std::span<const std::uint32_t> assignments, std::span<const float> feats,
                              std::size_t dim, const PatchGrid& grid, std::span<const float> empty_token,
                              const simd::KernelTable& kernels = simd::active_kernels());

}  // namespace any3d
