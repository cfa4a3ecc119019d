#include "any3d/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "any3d/error.hpp"

namespace any3d {
namespace {

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= kPixelSnap ? r : x;
}

std::int64_t clamp_cell(double pixel, int patch_px, int count) {
    const double c = std::floor(snap(pixel) / patch_px);
    if (!(c >= 0.0)) return 0;  // also catches NaN
    return std::min<std::int64_t>(static_cast<std::int64_t>(std::min(c, 1e15)), count - 1);
}

}  // namespace

void PatchGrid::validate() const {
    require(rows > 0 && cols > 0 && patch_px > 0, "patch grid: rows, cols and patch_px must be positive");
    require(image_width > 0 && image_height > 0, "patch grid: image size must be positive");
    require(static_cast<long long>(rows) * patch_px <= static_cast<long long>(image_height) + patch_px &&
                static_cast<long long>(cols) * patch_px <= static_cast<long long>(image_width) + patch_px,
            "patch grid: grid extends more than one patch beyond the image");
}

PatchGrid PatchGrid::covering(int image_width, int image_height, int patch_px) {
    require(patch_px > 0 && image_width > 0 && image_height > 0, "patch grid: sizes must be positive");
    return {(image_height + patch_px - 1) / patch_px, (image_width + patch_px - 1) / patch_px, patch_px,
            image_width, image_height};
}

std::vector<std::uint32_t> assign_patches(const PatchGrid& grid, const CameraIntrinsics& intr,
                                          std::span<const Eigen::Vector3d> points,
                                          const simd::KernelTable& kernels) {
    grid.validate();
    intr.validate();
    require(intr.width == grid.image_width && intr.height == grid.image_height,
            "assign: intrinsics image size does not match the patch grid");
    const std::size_t n = points.size();
    std::vector<double> x(n), y(n), z(n), u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(points[i].z() > 0.0, "assign: point must lie in front of the camera (z > 0)");
        x[i] = points[i].x();
        y[i] = points[i].y();
        z[i] = points[i].z();
    }
    kernels.project(intr.pinhole(), x.data(), y.data(), z.data(), u.data(), v.data(), n);
    std::vector<std::uint32_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = clamp_cell(u[i], grid.patch_px, grid.cols);
        const auto row = clamp_cell(v[i], grid.patch_px, grid.rows);
        out[i] = static_cast<std::uint32_t>(row * grid.cols + col);
    }
    return out;
}

std::size_t PatchFeatureGrid::empty_count() const {
    return static_cast<std::size_t>(std::count(empty_mask.begin(), empty_mask.end(), std::uint8_t{1}));
}

void PatchFeatureGrid::validate() const {
    require(features.size() == size() * dim && empty_mask.size() == size() && empty_token.size() == dim,
            "patch features: inconsistent dimensions");
    for (float f : features) require(std::isfinite(f), "patch features: non-finite entry");
    for (std::size_t j = 0; j < size(); ++j) {
        if (!empty_mask[j]) continue;
        require(std::equal(empty_token.begin(), empty_token.end(), features.begin() + j * dim),
                "patch features: empty patch differs from the empty token");
    }
}

PatchFeatureGrid scatter_mean(std::span<const std::uint32_t> assignments, std::span<const float> feats,
                              std::size_t dim, const PatchGrid& grid, std::span<const float> empty_token,
                              const simd::KernelTable& kernels) {
    grid.validate();
    require(dim > 0, "scatter_mean: feature dimension must be positive");
    require(feats.size() == assignments.size() * dim, "scatter_mean: one feature row per assignment required");
    require(empty_token.size() == dim, "scatter_mean: empty token dimension differs from features");
    const std::size_t patches = grid.size();

    std::vector<double> acc(patches * dim, 0.0);
    std::vector<std::size_t> count(patches, 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const std::uint32_t a = assignments[i];
        require(a < patches, "scatter_mean: patch index out of range");
        kernels.scatter_add(acc.data() + a * dim, feats.data() + i * dim, dim);
        ++count[a];
    }

    PatchFeatureGrid out;
    out.rows = grid.rows;
    out.cols = grid.cols;
    out.dim = dim;
    out.features.resize(patches * dim);
    out.empty_mask.assign(patches, 0);
    out.empty_token.assign(empty_token.begin(), empty_token.end());
    for (std::size_t j = 0; j < patches; ++j) {
        float* dst = out.features.data() + j * dim;
        if (count[j] == 0) {
            out.empty_mask[j] = 1;
            std::copy(empty_token.begin(), empty_token.end(), dst);
            continue;
        }
        const double n = static_cast<double>(count[j]);
        for (std::size_t k = 0; k < dim; ++k) dst[k] = static_cast<float>(acc[j * dim + k] / n);
    }
    return out;
}

}  // namespace any3d
