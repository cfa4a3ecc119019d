#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "any3d/geometry.hpp"
#include "any3d/rng.hpp"

namespace any3d::testutil {

// Uniform points in the axis-aligned box [lo, hi].
inline PointCloud random_cloud(std::size_t n, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, CounterRng rng,
                               bool with_normals = false) {
    PointCloud c;
    c.coords.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d p;
        for (int a = 0; a < 3; ++a) p[a] = rng.uniform(lo[a], hi[a]);
        c.coords.push_back(p);
        c.colors.emplace_back(static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                              static_cast<float>(rng.uniform()));
        if (with_normals) c.normals.push_back(Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized());
    }
    return c;
}

// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("any3d_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace any3d::testutil
