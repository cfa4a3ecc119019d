#include "any3d/compression.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "any3d/rng.hpp"

namespace any3d {
namespace {

constexpr double kMaxCell = 2147483648.0;  // 2^31

struct VoxelHash {
    std::size_t operator()(const VoxelCoord& v) const noexcept {
        std::uint64_t h = mix64(static_cast<std::uint64_t>(v[0]));
        h = hash_combine(h, static_cast<std::uint64_t>(v[1]));
        h = hash_combine(h, static_cast<std::uint64_t>(v[2]));
        return static_cast<std::size_t>(h);
    }
};

std::int64_t checked_cell(double c) {
    require(std::isfinite(c) && c >= -kMaxCell && c < kMaxCell, "compress: voxel coordinate beyond +-2^31 cells");
    return static_cast<std::int64_t>(c);
}

std::uint64_t voxel_key_hash(std::uint64_t seed, const VoxelCoord& v) {
    return hash_combine(hash_combine(hash_combine(seed, static_cast<std::uint64_t>(v[0])),
                                     static_cast<std::uint64_t>(v[1])),
                        static_cast<std::uint64_t>(v[2]));
}

}  // namespace

void VoxelSpec::validate() const {
    require(std::isfinite(g) && g > 0.0, "voxel: g must be positive");
}

VoxelCoord voxel_of(const Eigen::Vector3d& p, double g) {
    require(g > 0.0, "voxel: g must be positive");
    return {checked_cell(std::floor(p.x() / g)), checked_cell(std::floor(p.y() / g)),
            checked_cell(std::floor(p.z() / g))};
}

CompressedCloud compress(const PointCloud& cloud, const VoxelSpec& spec, const simd::KernelTable& kernels) {
    spec.validate();
    require(!cloud.empty(), "compress: empty cloud");
    const std::size_t n = cloud.size();
    require(n <= std::numeric_limits<std::uint32_t>::max(), "compress: too many points for uint32 inverse index");

    // Interleaved xyz is exactly the coords buffer; floor it in one pass.
    std::vector<double> flat(3 * n), cells(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        flat[3 * i] = cloud.coords[i].x();
        flat[3 * i + 1] = cloud.coords[i].y();
        flat[3 * i + 2] = cloud.coords[i].z();
    }
    kernels.voxel_floor(flat.data(), spec.g, cells.data(), 3 * n);

    CompressedCloud out;
    out.inverse_index.resize(n);
    std::unordered_map<VoxelCoord, std::uint32_t, VoxelHash> slot_of;
    slot_of.reserve(n / 4 + 16);
    std::vector<std::size_t> rep_index;
    std::vector<std::uint32_t> members;  // SeededRandom: occupancy per voxel

    for (std::size_t i = 0; i < n; ++i) {
        const VoxelCoord v{checked_cell(cells[3 * i]), checked_cell(cells[3 * i + 1]),
                           checked_cell(cells[3 * i + 2])};
        auto [it, inserted] = slot_of.try_emplace(v, static_cast<std::uint32_t>(out.voxel_coords.size()));
        if (inserted) {
            out.voxel_coords.push_back(v);
            rep_index.push_back(i);
            members.push_back(0);
        }
        out.inverse_index[i] = it->second;
        ++members[it->second];
    }

    if (spec.rule == RepresentativeRule::SeededRandom) {
        // Pick the r-th member of each voxel (in input order), r keyed by voxel.
        std::vector<std::uint32_t> target(out.voxel_coords.size()), seen(out.voxel_coords.size(), 0);
        for (std::size_t s = 0; s < target.size(); ++s) {
            CounterRng rng(voxel_key_hash(spec.seed, out.voxel_coords[s]));
            target[s] = static_cast<std::uint32_t>(rng.uniform_int(0, members[s] - 1));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t s = out.inverse_index[i];
            if (seen[s]++ == target[s]) rep_index[s] = i;
        }
    }

    out.representatives = cloud.select(rep_index);
    return out;
}

std::vector<float> decompress_rows(const CompressedCloud& comp, std::span<const float> rep_values,
                                   std::size_t dim) {
    require(dim > 0 && rep_values.size() == comp.size() * dim,
            "decompress: expected one row per representative");
    std::vector<float> out;
    out.reserve(comp.dense_size() * dim);
    for (std::uint32_t r : comp.inverse_index) {
        const auto row = rep_values.subspan(static_cast<std::size_t>(r) * dim, dim);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

}  // namespace any3d
