#include <gtest/gtest.h>

#include <cmath>

#include "any3d/datapipe.hpp"
#include "any3d/error.hpp"
#include "any3d/geometry.hpp"
#include "any3d/knn.hpp"
#include "any3d/oracle.hpp"
#include "test_util.hpp"

using namespace any3d;

namespace {

const CameraIntrinsics kCam{200.0, 200.0, 128.0, 128.0, 256, 256};

}  // namespace

TEST(Intrinsics, ValidateRejectsBadValues) {
    EXPECT_NO_THROW(kCam.validate());
    EXPECT_THROW((CameraIntrinsics{0.0, 200.0, 128.0, 128.0, 256, 256}.validate()), PreconditionError);
    EXPECT_THROW((CameraIntrinsics{200.0, -1.0, 128.0, 128.0, 256, 256}.validate()), PreconditionError);
    EXPECT_THROW((CameraIntrinsics{200.0, 200.0, 256.0, 128.0, 256, 256}.validate()), PreconditionError);
    EXPECT_THROW((CameraIntrinsics{200.0, 200.0, 128.0, -0.5, 256, 256}.validate()), PreconditionError);
}

TEST(Intrinsics, ResizeScalesLinearly) {
    const auto r = kCam.resized(224, 224);
    EXPECT_DOUBLE_EQ(r.fx, 175.0);
    EXPECT_DOUBLE_EQ(r.cx, 112.0);
    EXPECT_EQ(r.width, 224);
}

TEST(Backproject, MatchesTermByTermOracle) {
    CounterRng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(0, 256), v = rng.uniform(0, 256), d = rng.uniform(0.05, 5.0);
        const auto p = backproject_pixel(kCam, u, v, d);
        const auto q = oracle::backproject(kCam.fx, kCam.fy, kCam.cx, kCam.cy, u, v, d);
        EXPECT_NEAR((p - q).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(Backproject, PrincipalPointAlongAxis) {
    const auto p = backproject_pixel(kCam, 128, 128, 1.5);
    EXPECT_EQ(p, Eigen::Vector3d(0, 0, 1.5));
}

TEST(Backproject, BatchedEqualsSingle) {
    CounterRng rng(2);
    std::vector<double> u(257), v(257), d(257), x(257), y(257), z(257);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = rng.uniform(0, 256);
        v[i] = rng.uniform(0, 256);
        d[i] = rng.uniform(0.1, 2);
    }
    backproject_pixels(kCam, u, v, d, x, y, z);
    for (std::size_t i = 0; i < u.size(); ++i)
        EXPECT_EQ(Eigen::Vector3d(x[i], y[i], z[i]), backproject_pixel(kCam, u[i], v[i], d[i]));
}

TEST(Project, RoundtripWithinTolerance) {
    CounterRng rng(3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(0, 256), v = rng.uniform(0, 256), d = rng.uniform(0.05, 5.0);
        const auto uv = project_point(kCam, backproject_pixel(kCam, u, v, d));
        worst = std::max({worst, std::abs(uv.x() - u), std::abs(uv.y() - v)});
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Project, RejectsPointsBehindCamera) {
    EXPECT_THROW(project_point(kCam, Eigen::Vector3d(0, 0, 0)), PreconditionError);
    EXPECT_THROW(project_point(kCam, Eigen::Vector3d(0, 0, -1)), PreconditionError);
}

TEST(Lift, PointCountEqualsValidDepthPixels) {
    const auto img = datapipe::synth_scene(datapipe::default_scene());
    std::size_t valid = 0;
    for (float d : img.depth.values) valid += d > 0.0f;
    const auto cloud = lift_frame(kCam, img.rgb, img.depth);
    EXPECT_EQ(cloud.size(), valid);
    ASSERT_TRUE(cloud.has_pixel_src());
    for (std::size_t i = 0; i < cloud.size(); i += 97) {
        const auto [u, v] = cloud.pixel_src[i];
        EXPECT_EQ(cloud.coords[i], backproject_pixel(kCam, u, v, img.depth.at(u, v)));
        EXPECT_EQ(cloud.colors[i], img.rgb.at(u, v));
    }
}

TEST(Lift, AllZeroDepthGivesEmptyCloud) {
    const DepthImage depth(16, 16);
    const RgbImage rgb(16, 16);
    const CameraIntrinsics cam{20, 20, 8, 8, 16, 16};
    EXPECT_TRUE(lift_frame(cam, rgb, depth).empty());
}

TEST(Lift, SizeMismatchRejected) {
    const DepthImage depth(16, 16);
    const RgbImage rgb(8, 16);
    const CameraIntrinsics cam{20, 20, 8, 8, 16, 16};
    EXPECT_THROW(lift_frame(cam, rgb, depth), PreconditionError);
}

TEST(Float32, RoundingReachesEveryComponent) {
    for (std::size_t n : {1, 2, 3, 7, 10, 33, 1001}) {
        const auto orig = testutil::random_cloud(n, {0, 0, 0}, {1, 1, 1}, CounterRng(2)).coords;
        auto v = orig;
        round_to_float32(v);
        for (std::size_t i = 0; i < n; ++i)
            for (int a = 0; a < 3; ++a) ASSERT_EQ(v[i][a], static_cast<double>(static_cast<float>(orig[i][a]))) << n << " " << i;
    }
}

TEST(Crop, MatchesPredicateOracle) {
    const auto cloud = testutil::random_cloud(10000, {-1.5, -0.8, 0.0}, {1.5, 0.8, 2.5}, CounterRng(4));
    const CropSpec spec;
    const auto kept = crop_cloud(cloud, spec);
    const auto idx = oracle::crop_indices(cloud.coords, spec);
    ASSERT_EQ(kept.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        EXPECT_EQ(kept.coords[i], cloud.coords[idx[i]]);
        EXPECT_EQ(kept.colors[i], cloud.colors[idx[i]]);
    }
}

TEST(Crop, EverythingInsideIsIdentity) {
    const auto cloud = testutil::random_cloud(500, {-0.2, -0.2, 0.5}, {0.2, 0.2, 1.0}, CounterRng(5));
    const auto kept = crop_cloud(cloud, CropSpec{});
    EXPECT_EQ(kept.coords, cloud.coords);
}

TEST(Crop, InvalidSpecRejected) {
    CropSpec bad;
    bad.z_min = 3.0;
    EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(Knn, GridMatchesBruteForce) {
    // Surface-like cloud plus duplicates so ties are exercised.
    auto cloud = testutil::random_cloud(3000, {-0.3, -0.3, 0.8}, {0.3, 0.3, 0.8}, CounterRng(6));
    for (int i = 0; i < 50; ++i) cloud.coords.push_back(cloud.coords[static_cast<std::size_t>(i) * 7]);
    const KnnGrid grid(cloud.coords);
    std::vector<std::size_t> got;
    CounterRng rng(7);
    for (int q = 0; q < 300; ++q) {
        const Eigen::Vector3d p = q % 2 ? cloud.coords[static_cast<std::size_t>(q) * 5]
                                        : Eigen::Vector3d(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 0.8);
        grid.query(p, 16, got);
        EXPECT_EQ(got, oracle::knn(cloud.coords, p, 16)) << "query " << q;
    }
}

TEST(Knn, KEqualsSizeReturnsEverything) {
    const auto cloud = testutil::random_cloud(20, {0, 0, 0}, {1, 1, 1}, CounterRng(8));
    const KnnGrid grid(cloud.coords);
    std::vector<std::size_t> got;
    grid.query(Eigen::Vector3d(5, 5, 5), 20, got);
    EXPECT_EQ(got, oracle::knn(cloud.coords, Eigen::Vector3d(5, 5, 5), 20));
}

TEST(Normals, PlaneNormalsFaceCamera) {
    // Tilted plane z = 1 + 0.3 x in front of the camera.
    PointCloud c;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            const double x = -0.2 + 0.01 * i, y = -0.2 + 0.01 * j;
            c.coords.emplace_back(x, y, 1.0 + 0.3 * x);
            c.colors.emplace_back(1, 1, 1);
        }
    const auto est = estimate_normals(c);
    EXPECT_TRUE(est.degenerate.empty());
    const Eigen::Vector3d expected = Eigen::Vector3d(0.3, 0.0, -1.0).normalized();
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(est.cloud.normals[i].norm(), 1.0, 1e-12);
        EXPECT_GT(est.cloud.normals[i].dot(expected), 1.0 - 1e-9);
        EXPECT_GE(est.cloud.normals[i].dot(-c.coords[i]), 0.0);
    }
}

TEST(Normals, CollinearNeighborhoodsFlagged) {
    PointCloud c;
    for (int i = 0; i < 30; ++i) {
        c.coords.emplace_back(0.01 * i, 0.0, 1.0);
        c.colors.emplace_back(0, 0, 0);
    }
    const auto est = estimate_normals(c);
    EXPECT_EQ(est.degenerate.size(), c.size());
    for (const auto& n : est.cloud.normals) EXPECT_EQ(n, Eigen::Vector3d(0, 0, -1));
}

TEST(Normals, MatchBruteForceNeighborhoods) {
    const auto img = datapipe::synth_scene(datapipe::default_scene());
    auto cloud = crop_cloud(lift_frame(kCam, img.rgb, img.depth), CropSpec{});
    std::vector<std::size_t> sub;
    for (std::size_t i = 0; i < cloud.size(); i += 25) sub.push_back(i);
    cloud = cloud.select(sub);
    const auto est = estimate_normals(cloud, 16);
    for (std::size_t i = 0; i < cloud.size(); i += 41) {
        const auto nb = oracle::knn(cloud.coords, cloud.coords[i], 16);
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (auto j : nb) mean += cloud.coords[j];
        mean /= 16.0;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (auto j : nb) cov += (cloud.coords[j] - mean) * (cloud.coords[j] - mean).transpose();
        // The estimated normal spans the direction of least variance.
        const Eigen::Vector3d& n = est.cloud.normals[i];
        const double along = n.dot(cov * n);
        for (int t = 0; t < 20; ++t) {
            Eigen::Vector3d r = Eigen::Vector3d::Random().normalized();
            EXPECT_LE(along, r.dot(cov * r) + 1e-12);
        }
    }
}
