#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "any3d/alignment.hpp"
#include "any3d/compression.hpp"
#include "any3d/geometry.hpp"

namespace any3d::io {

// Binary little-endian PLY: x y z (float32), red green blue (uint8), and
// nx ny nz (float32) when the cloud has normals.
void write_ply(const std::string& path, const PointCloud& cloud);
std::vector<std::uint8_t> encode_ply(const PointCloud& cloud);

// Reads binary_little_endian or ascii vertex clouds. Requires x, y, z; colors
// and normals are read when present, other vertex properties are skipped.
PointCloud read_ply(const std::string& path);
PointCloud decode_ply(std::span<const std::uint8_t> bytes, const std::string& what);

// Representatives as PLY plus a sidecar of N little-endian uint32 inverse
// indices followed by 3M little-endian int64 voxel coordinates.
void write_compressed(const std::string& ply_path, const std::string& sidecar_path, const CompressedCloud& comp);
CompressedCloud read_compressed(const std::string& ply_path, const std::string& sidecar_path);

// Feature dump: uint32 LE count, uint32 LE dim, count * dim float32 LE
// (row-major), then count mask bytes (1 = empty).
struct FeatureDump {
    std::uint32_t count = 0;
    std::uint32_t dim = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> mask;
};

void write_feature_dump(const std::string& path, const FeatureDump& dump);
FeatureDump read_feature_dump(const std::string& path);

FeatureDump to_dump(const PatchFeatureGrid& grid);
FeatureDump to_dump(std::span<const double> values, std::size_t dim, std::span<const std::uint8_t> mask);

}  // namespace any3d::io
