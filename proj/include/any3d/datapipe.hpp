#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "any3d/geometry.hpp"

namespace any3d::datapipe {

// ---------------------------------------------------------------------------
// Depth sources and mixing

inline constexpr std::string_view kSimulatorSource = "Simulator/Sensor";

struct SourceMix {
    std::vector<std::pair<std::string, double>> entries;

    // Throws PreconditionError unless non-empty, names unique, probabilities
    // >= 0 and summing to 1 within 1e-9.
    void validate() const;
    bool contains(std::string_view name) const;

    // Simulator/Sensor 30%, UniDepthV2 30%, DepthAnything3 20%, MapAnything 20%.
    static SourceMix hybrid_default();
    static SourceMix single(std::string name);
};

// Uniform draw in [0, 1) keyed by (seed, trajectory id); independent of any
// other trajectory, so adding trajectories never changes existing draws.
double trajectory_draw(std::uint64_t seed, std::string_view trajectory_id);

std::string assign_source(const SourceMix& mix, std::uint64_t seed, std::string_view trajectory_id);

std::map<std::string, std::string> sample_sources(const SourceMix& mix, std::span<const std::string> trajectory_ids,
                                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Depth and color files

// Raw little-endian float32 payload (v outer, u inner) at `path`, intrinsics
// sidecar at depth_sidecar_path(path). Invalid pixels are stored as +0.0.
void write_depth(const std::string& path, const DepthImage& depth, const CameraIntrinsics& intr);

struct DepthFrame {
    DepthImage depth;
    CameraIntrinsics intrinsics;
};

DepthFrame read_depth(const std::string& path);
CameraIntrinsics read_depth_sidecar(const std::string& path);
std::string depth_sidecar_path(const std::string& depth_path);

// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const RgbImage& rgb);
RgbImage read_ppm(const std::string& path);

// ---------------------------------------------------------------------------
// Analytic tabletop scenes

struct Primitive {
    enum class Kind { Box, Sphere };
    Kind kind = Kind::Box;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();  // world frame, meters
    Eigen::Vector3d half_extents{0.03, 0.03, 0.03};    // box only
    double radius = 0.03;                              // sphere only
    double yaw = 0.0;                                  // box rotation about world z
    Eigen::Vector3f color{0.8f, 0.2f, 0.2f};
};

// World frame: z up, table top is the plane z = table_height, centered on
// the origin with the given x/y extent.
struct SceneSpec {
    double table_height = 0.0;
    Eigen::Vector2d table_extent{0.40, 0.50};
    Eigen::Vector3f table_color{0.55f, 0.45f, 0.35f};
    std::vector<Primitive> objects;
    CameraIntrinsics camera;
    Eigen::Vector3d camera_eye = Eigen::Vector3d::Zero();
    Eigen::Vector3d camera_target = Eigen::Vector3d::Zero();
    Eigen::Vector3d world_up{0.0, 0.0, 1.0};
    Eigen::Vector3d light_dir{0.3, -0.4, 1.0};  // toward the light
    std::uint64_t seed = 0;

    void validate() const;
};

// The committed default tabletop: 256 x 256 camera and four objects.
SceneSpec default_scene();

// default_scene() with object layout and camera pose jittered from seed.
SceneSpec jittered_scene(std::uint64_t seed);

// Camera-to-world rotation (columns: camera x right, y down, z forward).
Eigen::Matrix3d camera_rotation(const SceneSpec& spec);

struct SceneImages {
    RgbImage rgb;
    DepthImage depth;
};

// Per-pixel ray cast; depth is the camera z of the nearest hit, 0 for none.
SceneImages synth_scene(const SceneSpec& spec);

// ---------------------------------------------------------------------------
// Manifests

struct FrameRecord {
    std::string trajectory_id;
    std::int64_t frame_id = 0;
    std::string rgb_path;
    std::string depth_source;
    std::string depth_path;
    CameraIntrinsics intrinsics;
};

// One frame before source assignment: depth_paths maps each available
// source to its depth file.
struct FrameInput {
    std::string trajectory_id;
    std::int64_t frame_id = 0;
    std::string rgb_path;
    CameraIntrinsics intrinsics;
    std::map<std::string, std::string> depth_paths;
};

struct ManifestOptions {
    // Check that every assigned depth file exists and is well formed.
    bool validate_files = true;
};

struct Manifest {
    std::vector<FrameRecord> records;
    std::map<std::string, std::size_t> summary;  // source -> frame count
    std::vector<std::string> problems;           // validation report

    bool ok() const { return problems.empty(); }
};

// Assigns sources per trajectory and validates inputs. Problems are recorded,
// never thrown.
Manifest build_manifest(std::span<const FrameInput> frames, const SourceMix& mix, std::uint64_t seed,
                        const ManifestOptions& options = {});

// JSONL: one FrameRecord per line, then {"summary": {...}, "validation": {...}}.
void write_manifest(const std::string& path, const Manifest& manifest);
std::string manifest_to_jsonl(const Manifest& manifest);
Manifest read_manifest(const std::string& path);

// Frames sharing a trajectory id that disagree on depth_source.
std::vector<std::string> inconsistent_trajectories(const Manifest& manifest);

}  // namespace any3d::datapipe
