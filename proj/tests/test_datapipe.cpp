#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "any3d/binio.hpp"
#include "any3d/datapipe.hpp"
#include "any3d/error.hpp"
#include "any3d/pipeline.hpp"
#include "test_util.hpp"

using namespace any3d;
using namespace any3d::datapipe;

namespace {

const CameraIntrinsics kCam{200.0, 200.0, 128.0, 128.0, 256, 256};

std::vector<std::string> ids(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("traj_" + std::to_string(i));
    return out;
}

std::vector<FrameInput> frames_for(int trajectories, int per) {
    std::vector<FrameInput> out;
    for (int t = 0; t < trajectories; ++t)
        for (int f = 0; f < per; ++f) {
            FrameInput in{"traj_" + std::to_string(t), f, "rgb.ppm", kCam, {}};
            for (const auto& [src, p] : SourceMix::hybrid_default().entries) in.depth_paths[src] = src + ".depth";
            out.push_back(in);
        }
    return out;
}

}  // namespace

TEST(DepthFile, RoundtripIsByteIdentical) {
    const auto dir = testutil::scratch_dir("depth_rt");
    DepthImage d(256, 256);
    CounterRng rng(1);
    for (float& v : d.values) v = rng.uniform() < 0.2 ? 0.0f : static_cast<float>(rng.uniform(0.1, 3.0));
    write_depth(dir + "/a.depth", d, kCam);
    EXPECT_EQ(std::filesystem::file_size(dir + "/a.depth"), 262144u);
    const auto back = read_depth(dir + "/a.depth");
    EXPECT_EQ(back.intrinsics, kCam);
    EXPECT_EQ(std::memcmp(back.depth.values.data(), d.values.data(), d.values.size() * 4), 0);
    write_depth(dir + "/b.depth", back.depth, back.intrinsics);
    EXPECT_EQ(io::read_file(dir + "/a.depth"), io::read_file(dir + "/b.depth"));
    EXPECT_EQ(io::read_file(dir + "/a.depth.json"), io::read_file(dir + "/b.depth.json"));
}

TEST(DepthFile, NegativeZeroStoredAsZero) {
    const auto dir = testutil::scratch_dir("depth_zero");
    DepthImage d(4, 4);
    d.at(1, 1) = -0.0f;
    write_depth(dir + "/z.depth", d, CameraIntrinsics{4, 4, 2, 2, 4, 4});
    const auto bytes = io::read_file(dir + "/z.depth");
    for (auto b : bytes) EXPECT_EQ(b, 0);
}

TEST(DepthFile, RejectsInvalidValues) {
    const auto dir = testutil::scratch_dir("depth_bad");
    const CameraIntrinsics cam{4, 4, 2, 2, 4, 4};
    DepthImage d(4, 4);
    d.at(0, 0) = NAN;
    EXPECT_THROW(write_depth(dir + "/n.depth", d, cam), PreconditionError);
    d.at(0, 0) = -1.0f;
    EXPECT_THROW(write_depth(dir + "/n.depth", d, cam), PreconditionError);
    d.at(0, 0) = 1.0f;
    EXPECT_THROW(write_depth(dir + "/n.depth", d, CameraIntrinsics{4, 4, 2, 2, 8, 4}), PreconditionError);
}

TEST(DepthFile, TruncatedPayloadIsFormatError) {
    const auto dir = testutil::scratch_dir("depth_trunc");
    write_depth(dir + "/t.depth", DepthImage(8, 8), CameraIntrinsics{8, 8, 4, 4, 8, 8});
    std::filesystem::resize_file(dir + "/t.depth", 100);
    try {
        read_depth(dir + "/t.depth");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("t.depth"), std::string::npos);
    }
    std::filesystem::remove(dir + "/t.depth.json");
    EXPECT_THROW(read_depth(dir + "/t.depth"), IoError);
}

TEST(Ppm, Roundtrip) {
    const auto dir = testutil::scratch_dir("ppm");
    RgbImage img(5, 3);
    for (int i = 0; i < 15; ++i) img.values[static_cast<std::size_t>(i)] = Eigen::Vector3f(i / 15.0f, 0.5f, 1.0f);
    write_ppm(dir + "/a.ppm", img);
    const auto back = read_ppm(dir + "/a.ppm");
    ASSERT_EQ(back.width, 5);
    for (std::size_t i = 0; i < 15; ++i) EXPECT_LE((back.values[i] - img.values[i]).cwiseAbs().maxCoeff(), 0.5f / 255 + 1e-6f);
}

TEST(Mix, DefaultRatiosWithinTolerance) {
    const auto mix = SourceMix::hybrid_default();
    const auto traj = ids(10000);
    const auto assign = sample_sources(mix, traj, 42);
    std::map<std::string, int> count;
    for (const auto& [id, src] : assign) ++count[src];
    for (const auto& [src, p] : mix.entries) EXPECT_NEAR(count[src] / 10000.0, p, 0.015) << src;
}

TEST(Mix, AddingTrajectoriesKeepsAssignments) {
    const auto mix = SourceMix::hybrid_default();
    const auto small = sample_sources(mix, ids(100), 7);
    const auto big = sample_sources(mix, ids(1000), 7);
    for (const auto& [id, src] : small) EXPECT_EQ(big.at(id), src);
}

TEST(Mix, SingleSourceAndValidation) {
    const auto a = sample_sources(SourceMix::single("UniDepthV2"), ids(50), 1);
    for (const auto& [id, src] : a) EXPECT_EQ(src, "UniDepthV2");
    SourceMix bad{{{"a", 0.5}, {"b", 0.4}}};
    EXPECT_THROW(bad.validate(), PreconditionError);
    SourceMix dup{{{"a", 0.5}, {"a", 0.5}}};
    EXPECT_THROW(dup.validate(), PreconditionError);
    SourceMix neg{{{"a", 1.5}, {"b", -0.5}}};
    EXPECT_THROW(neg.validate(), PreconditionError);
    EXPECT_THROW(SourceMix{}.validate(), PreconditionError);
}

TEST(Manifest, SourceConstantWithinTrajectory) {
    ManifestOptions opt;
    opt.validate_files = false;
    const auto frames = frames_for(300, 4);
    const auto m = build_manifest(frames, SourceMix::hybrid_default(), 3, opt);
    EXPECT_TRUE(m.ok());
    EXPECT_TRUE(inconsistent_trajectories(m).empty());
    std::size_t total = 0;
    for (const auto& [src, n] : m.summary) total += n;
    EXPECT_EQ(total, frames.size());
    for (const auto& r : m.records) EXPECT_EQ(r.depth_path, r.depth_source + ".depth");
}

TEST(Manifest, JsonlDeterministicAndReadable) {
    const auto dir = testutil::scratch_dir("manifest");
    ManifestOptions opt;
    opt.validate_files = false;
    const auto frames = frames_for(20, 2);
    const auto m = build_manifest(frames, SourceMix::hybrid_default(), 3, opt);
    EXPECT_EQ(manifest_to_jsonl(m), manifest_to_jsonl(build_manifest(frames, SourceMix::hybrid_default(), 3, opt)));
    write_manifest(dir + "/m.jsonl", m);
    const auto back = read_manifest(dir + "/m.jsonl");
    EXPECT_EQ(back.records.size(), m.records.size());
    EXPECT_EQ(back.summary, m.summary);
    EXPECT_EQ(back.records[5].depth_source, m.records[5].depth_source);
    EXPECT_EQ(back.records[5].intrinsics, kCam);
}

TEST(Manifest, ProblemsReportedNotThrown) {
    const auto dir = testutil::scratch_dir("manifest_bad");
    auto frames = frames_for(3, 1);
    frames[1].depth_paths.clear();
    const auto m = build_manifest(frames, SourceMix::hybrid_default(), 3);
    EXPECT_FALSE(m.ok());
    EXPECT_EQ(m.records.size(), 3u);
    // Missing files are found when validation is on.
    EXPECT_GE(m.problems.size(), 3u);
}

TEST(Manifest, ValidFilesPass) {
    const auto dir = testutil::scratch_dir("manifest_ok");
    write_depth(dir + "/d.depth", DepthImage(256, 256), kCam);
    FrameInput f{"t0", 0, dir + "/rgb.ppm", kCam, {{std::string(kSimulatorSource), dir + "/d.depth"}}};
    const auto m = build_manifest(std::vector<FrameInput>{f}, SourceMix::single(std::string(kSimulatorSource)), 0);
    EXPECT_TRUE(m.ok()) << (m.problems.empty() ? "" : m.problems[0]);
}

TEST(DataRoot, PrefixesRelativePaths) {
    const auto dir = testutil::scratch_dir("root");
    write_depth(dir + "/rel.depth", DepthImage(256, 256), kCam);
    FrameInput f{"t0", 0, "rgb.ppm", kCam, {{std::string(kSimulatorSource), "rel.depth"}}};
    const std::vector<FrameInput> frames{f};
    const auto mix = SourceMix::single(std::string(kSimulatorSource));
    ::unsetenv("ANY3D_DATA_ROOT");
    EXPECT_FALSE(build_manifest(frames, mix, 0).ok());
    ::setenv("ANY3D_DATA_ROOT", dir.c_str(), 1);
    EXPECT_TRUE(build_manifest(frames, mix, 0).ok());
    EXPECT_EQ(io::resolve_data_path("/abs/x"), "/abs/x");
    ::unsetenv("ANY3D_DATA_ROOT");
}

TEST(Synth, DefaultSceneInCountBands) {
    const auto spec = default_scene();
    const auto img = synth_scene(spec);
    const auto r = lift_compress(PipelineConfig{}, img.rgb, img.depth, spec.camera);
    EXPECT_GE(r.dense.size(), 30000u);
    EXPECT_LE(r.dense.size(), 60000u);
    EXPECT_GE(r.compressed.size(), 3000u);
    EXPECT_LE(r.compressed.size(), 8000u);
}

TEST(Synth, JitteredScenesStayInBands) {
    for (std::uint64_t seed : {1u, 2u, 3u, 17u, 99u}) {
        const auto spec = jittered_scene(seed);
        const auto img = synth_scene(spec);
        const auto r = lift_compress(PipelineConfig{}, img.rgb, img.depth, spec.camera);
        EXPECT_GE(r.dense.size(), 30000u) << seed;
        EXPECT_LE(r.dense.size(), 60000u) << seed;
        EXPECT_GE(r.compressed.size(), 3000u) << seed;
        EXPECT_LE(r.compressed.size(), 8000u) << seed;
    }
}

TEST(Synth, Deterministic) {
    const auto a = synth_scene(jittered_scene(5)), b = synth_scene(jittered_scene(5));
    EXPECT_EQ(a.depth.values, b.depth.values);
    EXPECT_EQ(a.rgb.values, b.rgb.values);
    EXPECT_NE(synth_scene(jittered_scene(6)).depth.values, a.depth.values);
}

TEST(Synth, DepthMatchesAnalyticTablePlane) {
    // Empty scene: every hit lies on the table plane z = 0 in the world.
    auto spec = default_scene();
    spec.objects.clear();
    const auto img = synth_scene(spec);
    const Eigen::Matrix3d rot = camera_rotation(spec);
    std::size_t hits = 0;
    for (int v = 0; v < 256; v += 7)
        for (int u = 0; u < 256; u += 7) {
            const float d = img.depth.at(u, v);
            if (d <= 0.0f) continue;
            ++hits;
            const Eigen::Vector3d world = spec.camera_eye + rot * backproject_pixel(spec.camera, u, v, d);
            EXPECT_NEAR(world.z(), spec.table_height, 1e-6);
        }
    EXPECT_GT(hits, 100u);
}
