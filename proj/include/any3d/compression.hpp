#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "any3d/error.hpp"
#include "any3d/geometry.hpp"

namespace any3d {

using VoxelCoord = std::array<std::int64_t, 3>;

enum class RepresentativeRule {
    LowestIndex,   // the contained point with the smallest input index
    SeededRandom,  // a uniformly drawn contained point, keyed by (seed, voxel)
};

struct VoxelSpec {
    double g = 0.01;  // voxel edge, meters
    RepresentativeRule rule = RepresentativeRule::LowestIndex;
    std::uint64_t seed = 0;

    void validate() const;
};

// One representative per occupied voxel plus the map back to the dense cloud.
struct CompressedCloud {
    PointCloud representatives;             // M points, ordered by first occurrence of their voxel
    std::vector<VoxelCoord> voxel_coords;   // M
    std::vector<std::uint32_t> inverse_index;  // N, values in [0, M)

    std::size_t dense_size() const { return inverse_index.size(); }
    std::size_t size() const { return voxel_coords.size(); }
};

// floor(p / g) per axis; throws if a coordinate lies beyond +-2^31 cells.
VoxelCoord voxel_of(const Eigen::Vector3d& p, double g);

CompressedCloud compress(const PointCloud& cloud, const VoxelSpec& spec,
                         const simd::KernelTable& kernels = simd::active_kernels());

// out[j] = rep_values[inverse_index[j]].
template <typename T>
std::vector<T> decompress_feature(const CompressedCloud& comp, std::span<const T> rep_values) {
    require(rep_values.size() == comp.size(), "decompress: expected one value per representative");
    std::vector<T> out;
    out.reserve(comp.dense_size());
    for (std::uint32_t r : comp.inverse_index) out.push_back(rep_values[r]);
    return out;
}

// Row form: rep_values holds M rows of `dim` values.
std::vector<float> decompress_rows(const CompressedCloud& comp, std::span<const float> rep_values,
                                   std::size_t dim);

}  // namespace any3d
