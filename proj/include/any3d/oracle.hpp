#pragma once

// Brute-force reference implementations. Deliberately slow and written
// without the library's kernels, grids or hash maps so that agreement with
// them is evidence rather than tautology.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "any3d/compression.hpp"
#include "any3d/geometry.hpp"

namespace any3d::oracle {

// Pinhole lift evaluated term by term in long double.
Eigen::Vector3d backproject(double fx, double fy, double cx, double cy, double u, double v, double d);

// Indices of the points inside the crop region, tested one inequality at a time.
std::vector<std::size_t> crop_indices(std::span<const Eigen::Vector3d> points, const CropSpec& spec);

struct VoxelGroups {
    std::vector<VoxelCoord> voxels;          // by first occurrence
    std::vector<std::size_t> representatives;  // lowest input index per voxel
    std::vector<std::uint32_t> inverse_index;
};

// Group-by floor(p / g) through an ordered map.
VoxelGroups voxel_group_by(std::span<const Eigen::Vector3d> points, double g);

// Per-patch mean via an explicit member list and long double sums; empty
// patches copy empty_token. Returns num_patches * dim values.
std::vector<float> scatter_mean(std::span<const std::uint32_t> assignments, std::span<const float> feats,
                                std::size_t dim, std::size_t num_patches, std::span<const float> empty_token);

// Sort all points by (squared distance, index) and keep the first k.
std::vector<std::size_t> knn(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& q, std::size_t k);

// y = W x + b with W row-major rows x cols, triple-loop style.
std::vector<double> matvec(std::span<const double> w, std::span<const double> x, std::span<const double> b,
                           std::size_t rows, std::size_t cols);

// Patch of a camera-frame point: long double projection, the same
// near-integer snap as the library, floor, clamp, row-major.
std::uint32_t assign_patch(const CameraIntrinsics& intr, const Eigen::Vector3d& p, int patch_px, int rows,
                           int cols);

// Row-major patch of integer pixel (u, v) on a grid of cols columns.
std::uint32_t patch_of_pixel(int u, int v, int patch_px, int cols);

}  // namespace any3d::oracle
