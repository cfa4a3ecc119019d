#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "any3d/simd/kernels.hpp"

namespace any3d {

// Pinhole intrinsics of a width x height image, in pixels.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    // Throws PreconditionError unless fx, fy > 0, 0 <= cx < width, 0 <= cy < height.
    void validate() const;

    // Intrinsics of the same camera after resizing the image to new_width x new_height.
    CameraIntrinsics resized(int new_width, int new_height) const;

    simd::PinholeParams pinhole() const { return {fx, fy, cx, cy}; }

    bool operator==(const CameraIntrinsics&) const = default;
};

// Metric depth in meters, row-major (v outer, u inner). 0 marks an invalid pixel.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0f) {}

    float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
    float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }

    void validate() const;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<Eigen::Vector3f> values;

    RgbImage() = default;
    RgbImage(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, Eigen::Vector3f::Zero()) {}

    Eigen::Vector3f& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
    const Eigen::Vector3f& at(int u, int v) const {
        return values[static_cast<std::size_t>(v) * width + u];
    }

    void validate() const;
};

// Parameters of the keep() predicate applied to camera-frame points.
struct CropSpec {
    double y_min = -0.5;
    double y_max = 0.5;
    double radius_xz_max = 1.2;
    double z_min = 0.1;
    double z_max = 2.0;

    void validate() const;
    bool keeps(const Eigen::Vector3d& p) const;
};

struct PixelIndex {
    int u = 0;
    int v = 0;
    bool operator==(const PixelIndex&) const = default;
};

// Camera-frame point cloud with aligned per-point attributes. normals and
// pixel_src are either empty or of the same length as coords.
struct PointCloud {
    std::vector<Eigen::Vector3d> coords;
    std::vector<Eigen::Vector3f> colors;
    std::vector<Eigen::Vector3d> normals;
    std::vector<PixelIndex> pixel_src;

    std::size_t size() const { return coords.size(); }
    bool empty() const { return coords.empty(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_pixel_src() const { return !pixel_src.empty(); }

    void validate() const;

    // Attributes of the points in idx, in that order.
    PointCloud select(std::span<const std::size_t> idx) const;
};

Eigen::Vector3d backproject_pixel(const CameraIntrinsics& intr, double u, double v, double d);

// Continuous pixel coordinates of a camera-frame point with z > 0.
Eigen::Vector2d project_point(const CameraIntrinsics& intr, const Eigen::Vector3d& p);

// Batched forms over structure-of-arrays buffers; no bounds checks beyond d > 0 / z > 0.
void backproject_pixels(const CameraIntrinsics& intr, std::span<const double> u,
                        std::span<const double> v, std::span<const double> d, std::span<double> x,
                        std::span<double> y, std::span<double> z,
                        const simd::KernelTable& kernels = simd::active_kernels());
void project_points(const CameraIntrinsics& intr, std::span<const double> x,
                    std::span<const double> y, std::span<const double> z, std::span<double> u,
                    std::span<double> v, const simd::KernelTable& kernels = simd::active_kernels());

// One point per pixel with depth > 0, row-major, colored from the same pixel.
PointCloud lift_frame(const CameraIntrinsics& intr, const RgbImage& rgb, const DepthImage& depth,
                      const simd::KernelTable& kernels = simd::active_kernels());

// Points satisfying spec.keeps(), order and attribute alignment preserved.
PointCloud crop_cloud(const PointCloud& cloud, const CropSpec& spec,
                      const simd::KernelTable& kernels = simd::active_kernels());

// Rounds every component to the nearest float32, in place.
void round_to_float32(std::vector<Eigen::Vector3d>& v);

struct NormalEstimate {
    PointCloud cloud;
    // Points whose neighborhood had rank < 2; their normal is (0, 0, -1).
    std::vector<std::size_t> degenerate;
};

constexpr int kDefaultNormalNeighbors = 16;

// Local-plane normals from the covariance of the k nearest neighbors (the
// point itself included), oriented so that dot(n, -p) >= 0.
NormalEstimate estimate_normals(const PointCloud& cloud, int k = kDefaultNormalNeighbors);

}  // namespace any3d
