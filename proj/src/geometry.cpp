#include "any3d/geometry.hpp"

#include <cmath>
#include <string>

#include "any3d/error.hpp"

namespace any3d {

void CameraIntrinsics::validate() const {
    require(width > 0 && height > 0, "intrinsics: image size must be positive");
    require(std::isfinite(fx) && fx > 0.0 && std::isfinite(fy) && fy > 0.0,
            "intrinsics: focal lengths must be positive");
    require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height,
            "intrinsics: principal point outside the image");
}

CameraIntrinsics CameraIntrinsics::resized(int new_width, int new_height) const {
    require(new_width > 0 && new_height > 0, "intrinsics: resize target must be positive");
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    return {fx * sx, fy * sy, cx * sx, cy * sy, new_width, new_height};
}

void DepthImage::validate() const {
    require(width > 0 && height > 0, "depth: image size must be positive");
    require(values.size() == static_cast<std::size_t>(width) * height,
            "depth: value count does not match width x height");
    for (float d : values) require(std::isfinite(d) && d >= 0.0f, "depth: values must be finite and >= 0");
}

void RgbImage::validate() const {
    require(width > 0 && height > 0, "rgb: image size must be positive");
    require(values.size() == static_cast<std::size_t>(width) * height,
            "rgb: value count does not match width x height");
    for (const auto& c : values)
        require((c.array() >= 0.0f).all() && (c.array() <= 1.0f).all(), "rgb: channels must lie in [0, 1]");
}

void CropSpec::validate() const {
    require(y_min < y_max, "crop: y_min must be below y_max");
    require(z_min < z_max, "crop: z_min must be below z_max");
    require(radius_xz_max > 0.0, "crop: radius_xz_max must be positive");
}

bool CropSpec::keeps(const Eigen::Vector3d& p) const {
    const double r = std::sqrt(p.x() * p.x() + p.z() * p.z());
    return p.y() >= y_min && p.y() <= y_max && r <= radius_xz_max && p.z() >= z_min && p.z() <= z_max;
}

void PointCloud::validate() const {
    const std::size_t n = coords.size();
    require(colors.size() == n, "cloud: colors not aligned with coords");
    require(normals.empty() || normals.size() == n, "cloud: normals not aligned with coords");
    require(pixel_src.empty() || pixel_src.size() == n, "cloud: pixel_src not aligned with coords");
    for (const auto& p : coords) require(p.allFinite() && p.z() > 0.0, "cloud: every point needs finite coords and z > 0");
    for (const auto& nrm : normals) require(std::abs(nrm.norm() - 1.0) <= 1e-6, "cloud: normals must be unit length");
}

PointCloud PointCloud::select(std::span<const std::size_t> idx) const {
    PointCloud out;
    out.coords.reserve(idx.size());
    out.colors.reserve(idx.size());
    for (std::size_t i : idx) {
        out.coords.push_back(coords[i]);
        out.colors.push_back(colors[i]);
    }
    if (has_normals()) {
        out.normals.reserve(idx.size());
        for (std::size_t i : idx) out.normals.push_back(normals[i]);
    }
    if (has_pixel_src()) {
        out.pixel_src.reserve(idx.size());
        for (std::size_t i : idx) out.pixel_src.push_back(pixel_src[i]);
    }
    return out;
}

Eigen::Vector3d backproject_pixel(const CameraIntrinsics& intr, double u, double v, double d) {
    require(d > 0.0 && std::isfinite(d), "backproject: depth must be positive");
    require(u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height, "backproject: pixel out of bounds");
    return {(u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d};
}

Eigen::Vector2d project_point(const CameraIntrinsics& intr, const Eigen::Vector3d& p) {
    require(p.z() > 0.0, "project: point must lie in front of the camera (z > 0)");
    return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

void backproject_pixels(const CameraIntrinsics& intr, std::span<const double> u,
                        std::span<const double> v, std::span<const double> d, std::span<double> x,
                        std::span<double> y, std::span<double> z, const simd::KernelTable& kernels) {
    const std::size_t n = u.size();
    require(v.size() == n && d.size() == n && x.size() == n && y.size() == n && z.size() == n,
            "backproject: buffer sizes differ");
    for (double di : d) require(di > 0.0, "backproject: depth must be positive");
    kernels.backproject(intr.pinhole(), u.data(), v.data(), d.data(), x.data(), y.data(), z.data(), n);
}

void project_points(const CameraIntrinsics& intr, std::span<const double> x,
                    std::span<const double> y, std::span<const double> z, std::span<double> u,
                    std::span<double> v, const simd::KernelTable& kernels) {
    const std::size_t n = x.size();
    require(y.size() == n && z.size() == n && u.size() == n && v.size() == n,
            "project: buffer sizes differ");
    for (double zi : z) require(zi > 0.0, "project: point must lie in front of the camera (z > 0)");
    kernels.project(intr.pinhole(), x.data(), y.data(), z.data(), u.data(), v.data(), n);
}

PointCloud lift_frame(const CameraIntrinsics& intr, const RgbImage& rgb, const DepthImage& depth,
                      const simd::KernelTable& kernels) {
    intr.validate();
    require(rgb.width == depth.width && rgb.height == depth.height,
            "lift: rgb and depth dimensions differ");
    require(depth.width == intr.width && depth.height == intr.height,
            "lift: image dimensions do not match intrinsics");
    require(rgb.values.size() == depth.values.size() &&
                depth.values.size() == static_cast<std::size_t>(depth.width) * depth.height,
            "lift: image buffers do not match their dimensions");

    std::vector<double> us, vs, ds;
    PointCloud cloud;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const float d = depth.at(u, v);
            if (!(d > 0.0f)) continue;
            us.push_back(u);
            vs.push_back(v);
            ds.push_back(d);
            cloud.pixel_src.push_back({u, v});
            cloud.colors.push_back(rgb.at(u, v));
        }
    }
    const std::size_t n = ds.size();
    std::vector<double> x(n), y(n), z(n);
    kernels.backproject(intr.pinhole(), us.data(), vs.data(), ds.data(), x.data(), y.data(), z.data(), n);
    cloud.coords.resize(n);
    for (std::size_t i = 0; i < n; ++i) cloud.coords[i] = {x[i], y[i], z[i]};
    return cloud;
}

void round_to_float32(std::vector<Eigen::Vector3d>& v) {
    // One flat pass. GCC 11 at -O3 drops the x/y lanes of the loop tail when
    // this is written per vector as p.cast<float>().cast<double>().
    if (v.empty()) return;
    double* d = v.front().data();
    for (std::size_t i = 0; i < 3 * v.size(); ++i) d[i] = static_cast<double>(static_cast<float>(d[i]));
}

PointCloud crop_cloud(const PointCloud& cloud, const CropSpec& spec, const simd::KernelTable& kernels) {
    spec.validate();
    const std::size_t n = cloud.size();
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = cloud.coords[i].x();
        y[i] = cloud.coords[i].y();
        z[i] = cloud.coords[i].z();
    }
    std::vector<std::uint8_t> keep(n);
    const simd::CropBounds bounds{spec.y_min, spec.y_max, spec.radius_xz_max, spec.z_min, spec.z_max};
    kernels.crop_mask(bounds, x.data(), y.data(), z.data(), keep.data(), n);
    std::vector<std::size_t> idx;
    idx.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) idx.push_back(i);
    return cloud.select(idx);
}

}  // namespace any3d
