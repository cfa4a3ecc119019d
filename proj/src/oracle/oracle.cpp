#include "any3d/oracle.hpp"

#include "any3d/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace any3d::oracle {

Eigen::Vector3d backproject(double fx, double fy, double cx, double cy, double u, double v, double d) {
    using LD = long double;
    const LD x = (static_cast<LD>(u) - cx) * d / fx;
    const LD y = (static_cast<LD>(v) - cy) * d / fy;
    return {static_cast<double>(x), static_cast<double>(y), d};
}

std::vector<std::size_t> crop_indices(std::span<const Eigen::Vector3d> points, const CropSpec& spec) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (p.y() < spec.y_min) continue;
        if (p.y() > spec.y_max) continue;
        if (std::sqrt(p.x() * p.x() + p.z() * p.z()) > spec.radius_xz_max) continue;
        if (p.z() < spec.z_min) continue;
        if (p.z() > spec.z_max) continue;
        out.push_back(i);
    }
    return out;
}

VoxelGroups voxel_group_by(std::span<const Eigen::Vector3d> points, double g) {
    // voxel -> (first index, group id)
    std::map<VoxelCoord, std::pair<std::size_t, std::uint32_t>> groups;
    VoxelGroups out;
    out.inverse_index.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        VoxelCoord key;
        for (int a = 0; a < 3; ++a) key[a] = static_cast<std::int64_t>(std::floor(points[i][a] / g));
        auto it = groups.find(key);
        if (it == groups.end()) {
            const auto id = static_cast<std::uint32_t>(out.voxels.size());
            it = groups.emplace(key, std::make_pair(i, id)).first;
            out.voxels.push_back(key);
            out.representatives.push_back(i);
        }
        out.inverse_index.push_back(it->second.second);
    }
    return out;
}

std::vector<float> scatter_mean(std::span<const std::uint32_t> assignments, std::span<const float> feats,
                                std::size_t dim, std::size_t num_patches, std::span<const float> empty_token) {
    std::map<std::uint32_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < assignments.size(); ++i) members[assignments[i]].push_back(i);
    std::vector<float> out(num_patches * dim);
    for (std::size_t j = 0; j < num_patches; ++j) {
        auto it = members.find(static_cast<std::uint32_t>(j));
        for (std::size_t c = 0; c < dim; ++c) {
            if (it == members.end()) {
                out[j * dim + c] = empty_token[c];
                continue;
            }
            long double s = 0;
            for (std::size_t i : it->second) s += feats[i * dim + c];
            out[j * dim + c] = static_cast<float>(s / static_cast<long double>(it->second.size()));
        }
    }
    return out;
}

std::vector<std::size_t> knn(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) all.emplace_back((points[i] - q).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k && i < all.size(); ++i) out.push_back(all[i].second);
    return out;
}

std::vector<double> matvec(std::span<const double> w, std::span<const double> x, std::span<const double> b,
                           std::size_t rows, std::size_t cols) {
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += w[r * cols + c] * x[c];
        y[r] = s + (b.empty() ? 0.0 : b[r]);
    }
    return y;
}

std::uint32_t assign_patch(const CameraIntrinsics& intr, const Eigen::Vector3d& p, int patch_px, int rows,
                           int cols) {
    using LD = long double;
    auto cell = [&](LD pix, int limit) {
        const LD nearest = std::round(pix);
        if (std::abs(pix - nearest) <= static_cast<LD>(kPixelSnap)) pix = nearest;
        auto c = static_cast<long long>(std::floor(pix / patch_px));
        if (c < 0) c = 0;
        if (c > limit - 1) c = limit - 1;
        return static_cast<std::uint32_t>(c);
    };
    const LD u = static_cast<LD>(intr.fx) * p.x() / p.z() + intr.cx;
    const LD v = static_cast<LD>(intr.fy) * p.y() / p.z() + intr.cy;
    return cell(v, rows) * static_cast<std::uint32_t>(cols) + cell(u, cols);
}

std::uint32_t patch_of_pixel(int u, int v, int patch_px, int cols) {
    return static_cast<std::uint32_t>((v / patch_px) * cols + (u / patch_px));
}

}  // namespace any3d::oracle
