#include <gtest/gtest.h>

#include <cstring>

#include "any3d/alignment.hpp"
#include "any3d/datapipe.hpp"
#include "any3d/error.hpp"
#include "any3d/oracle.hpp"
#include "test_util.hpp"

using namespace any3d;

TEST(PatchGrid, DefaultsAndValidation) {
    const PatchGrid g;
    EXPECT_EQ(g.size(), 256u);
    EXPECT_NO_THROW(g.validate());
    PatchGrid bad;
    bad.rows = 0;
    EXPECT_THROW(bad.validate(), PreconditionError);
    const auto c = PatchGrid::covering(230, 224, 14);
    EXPECT_EQ(c.cols, 17);
    EXPECT_EQ(c.rows, 16);
}

TEST(AssignPatches, PixelProvenance) {
    // Lift at grid resolution and never crop: each point lands in its pixel's patch.
    const PatchGrid grid;
    const CameraIntrinsics cam{175.0, 175.0, 112.0, 112.0, 224, 224};
    auto spec = datapipe::default_scene();
    spec.camera = cam;
    const auto img = datapipe::synth_scene(spec);
    const auto cloud = lift_frame(cam, img.rgb, img.depth);
    const auto a = assign_patches(grid, cam, cloud.coords);
    ASSERT_EQ(a.size(), cloud.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto [u, v] = cloud.pixel_src[i];
        ASSERT_EQ(a[i], oracle::patch_of_pixel(u, v, 14, 16)) << "pixel " << u << "," << v;
    }
}

TEST(AssignPatches, MatchesOracleAndClampsOutside) {
    const PatchGrid grid;
    const CameraIntrinsics cam{175.0, 175.0, 112.0, 112.0, 224, 224};
    const auto cloud = testutil::random_cloud(5000, {-1, -1, 0.5}, {1, 1, 1.5}, CounterRng(1));
    const auto a = assign_patches(grid, cam, cloud.coords);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LT(a[i], grid.size());
        EXPECT_EQ(a[i], oracle::assign_patch(cam, cloud.coords[i], 14, 16, 16));
    }
}

TEST(ScatterMean, MatchesGroupByOracle) {
    const PatchGrid grid;
    CounterRng rng(2);
    const std::size_t n = 1000, dim = 12;
    std::vector<std::uint32_t> a(n);
    std::vector<float> f(n * dim);
    for (auto& x : a) x = static_cast<std::uint32_t>(rng.uniform_int(0, 255));
    for (auto& x : f) x = static_cast<float>(rng.normal());
    std::vector<float> empty(dim);
    for (auto& x : empty) x = static_cast<float>(rng.normal());
    const auto out = scatter_mean(a, f, dim, grid, empty);
    const auto ref = oracle::scatter_mean(a, f, dim, grid.size(), empty);
    ASSERT_EQ(out.features.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(out.features[k], ref[k], 1e-6);
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (out.empty_mask[j]) EXPECT_EQ(std::memcmp(out.row(j).data(), empty.data(), dim * sizeof(float)), 0);
}

TEST(ScatterMean, SinglePatchOccupied) {
    const PatchGrid grid;
    const std::vector<std::uint32_t> a(10, 37);
    std::vector<float> f(10 * 2);
    for (std::size_t i = 0; i < 10; ++i) {
        f[2 * i] = static_cast<float>(i);
        f[2 * i + 1] = 1.0f;
    }
    const std::vector<float> empty{-7.0f, 3.5f};
    const auto out = scatter_mean(a, f, 2, grid, empty);
    EXPECT_EQ(out.empty_count(), 255u);
    EXPECT_FLOAT_EQ(out.row(37)[0], 4.5f);
    EXPECT_FLOAT_EQ(out.row(37)[1], 1.0f);
    EXPECT_EQ(out.row(0)[0], -7.0f);
    EXPECT_EQ(out.empty_mask[37], 0);
}

TEST(ScatterMean, NoPointsAllEmpty) {
    const PatchGrid grid;
    const std::vector<float> empty{1.0f, 2.0f, 3.0f};
    const auto out = scatter_mean({}, {}, 3, grid, empty);
    EXPECT_EQ(out.empty_count(), grid.size());
}

TEST(ScatterMean, RejectsBadShapes) {
    const PatchGrid grid;
    const std::vector<std::uint32_t> a{0, 300};
    const std::vector<float> f(4), empty(2);
    EXPECT_THROW(scatter_mean(a, f, 2, grid, empty), PreconditionError);
    const std::vector<std::uint32_t> ok{0, 1};
    EXPECT_THROW(scatter_mean(ok, f, 2, grid, std::vector<float>(3)), PreconditionError);
    EXPECT_THROW(scatter_mean(ok, std::vector<float>(3), 2, grid, empty), PreconditionError);
}

TEST(ScatterMean, SameResultForEveryKernelTable) {
    const PatchGrid grid;
    CounterRng rng(3);
    std::vector<std::uint32_t> a(4000);
    std::vector<float> f(4000 * 9);
    for (auto& x : a) x = static_cast<std::uint32_t>(rng.uniform_int(0, 200));
    for (auto& x : f) x = static_cast<float>(rng.normal());
    const std::vector<float> empty(9, 0.5f);
    const auto ref = scatter_mean(a, f, 9, grid, empty, simd::scalar_kernels());
    for (const auto* k : simd::available_kernels())
        EXPECT_EQ(scatter_mean(a, f, 9, grid, empty, *k).features, ref.features) << simd::level_name(k->level);
}
