#include <Eigen/Geometry>

#include <cmath>
#include <limits>

#include "any3d/datapipe.hpp"
#include "any3d/error.hpp"
#include "any3d/rng.hpp"

namespace any3d::datapipe {
namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

struct Hit {
    double t = kNoHit;
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3f color = Eigen::Vector3f::Zero();
};

void hit_table(const SceneSpec& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d, Hit& best) {
    if (d.z() == 0.0) return;
    const double t = (s.table_height - o.z()) / d.z();
    if (!(t > 0.0) || t >= best.t) return;
    const Eigen::Vector3d p = o + t * d;
    if (std::abs(p.x()) > 0.5 * s.table_extent.x() || std::abs(p.y()) > 0.5 * s.table_extent.y()) return;
    best = {t, Eigen::Vector3d::UnitZ(), s.table_color};
}

void hit_sphere(const Primitive& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d, Hit& best) {
    const Eigen::Vector3d oc = o - obj.center;
    const double a = d.squaredNorm();
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - obj.radius * obj.radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / a;
    if (!(t > 0.0)) t = (-b + sq) / a;
    if (!(t > 0.0) || t >= best.t) return;
    best = {t, (o + t * d - obj.center).normalized(), obj.color};
}

void hit_box(const Primitive& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d, Hit& best) {
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(obj.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Vector3d lo = rot.transpose() * (o - obj.center);
    const Eigen::Vector3d ld = rot.transpose() * d;
    double t_near = -kNoHit, t_far = kNoHit;
    int axis = 0;
    double sign = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double h = obj.half_extents[a];
        if (ld[a] == 0.0) {
            if (std::abs(lo[a]) > h) return;
            continue;
        }
        double t0 = (-h - lo[a]) / ld[a];
        double t1 = (h - lo[a]) / ld[a];
        double s = -1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            s = 1.0;
        }
        if (t0 > t_near) {
            t_near = t0;
            axis = a;
            sign = s;
        }
        t_far = std::min(t_far, t1);
    }
    if (t_near > t_far || !(t_near > 0.0) || t_near >= best.t) return;
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    n[axis] = sign;
    best = {t_near, rot * n, obj.color};
}

}  // namespace

void SceneSpec::validate() const {
    camera.validate();
    require(table_extent.x() > 0.0 && table_extent.y() > 0.0, "scene: table extent must be positive");
    for (const auto& obj : objects) {
        if (obj.kind == Primitive::Kind::Box)
            require((obj.half_extents.array() > 0.0).all(), "scene: box extents must be positive");
        else
            require(obj.radius > 0.0, "scene: sphere radius must be positive");
    }
    const Eigen::Vector3d forward = camera_target - camera_eye;
    require(forward.norm() > 1e-12, "scene: degenerate camera (zero viewing direction)");
    require(forward.normalized().cross(world_up.normalized()).norm() > 1e-9,
            "scene: degenerate camera (viewing direction parallel to up)");
    require(forward.dot(Eigen::Vector3d(0.0, 0.0, table_height) - camera_eye) > 0.0,
            "scene: camera must look toward the table");
}

Eigen::Matrix3d camera_rotation(const SceneSpec& spec) {
    const Eigen::Vector3d z = (spec.camera_target - spec.camera_eye).normalized();
    const Eigen::Vector3d x = z.cross(spec.world_up).normalized();
    const Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return r;
}

SceneSpec default_scene() {
    SceneSpec s;
    // RealSense-like field of view at 256 x 256.
    s.camera = {200.0, 200.0, 128.0, 128.0, 256, 256};
    s.camera_eye = {0.0, -0.36, 0.36};
    s.camera_target = {0.0, 0.0, 0.0};
    s.table_height = 0.0;
    s.table_extent = {0.70, 0.90};

    Primitive box_a;
    box_a.kind = Primitive::Kind::Box;
    box_a.center = {-0.09, 0.06, 0.04};
    box_a.half_extents = {0.035, 0.025, 0.04};
    box_a.yaw = 0.4;
    box_a.color = {0.85f, 0.20f, 0.15f};

    Primitive box_b;
    box_b.kind = Primitive::Kind::Box;
    box_b.center = {0.10, -0.08, 0.025};
    box_b.half_extents = {0.05, 0.03, 0.025};
    box_b.yaw = -0.7;
    box_b.color = {0.15f, 0.35f, 0.85f};

    Primitive ball_a;
    ball_a.kind = Primitive::Kind::Sphere;
    ball_a.center = {0.07, 0.11, 0.035};
    ball_a.radius = 0.035;
    ball_a.color = {0.20f, 0.75f, 0.25f};

    Primitive ball_b;
    ball_b.kind = Primitive::Kind::Sphere;
    ball_b.center = {-0.05, -0.12, 0.025};
    ball_b.radius = 0.025;
    ball_b.color = {0.90f, 0.80f, 0.15f};

    s.objects = {box_a, box_b, ball_a, ball_b};
    return s;
}

SceneSpec jittered_scene(std::uint64_t seed) {
    SceneSpec s = default_scene();
    s.seed = seed;
    CounterRng rng(hash_combine(seed, 0x5ce9e));
    for (auto& obj : s.objects) {
        const double lift = obj.center.z();
        obj.center.x() = rng.uniform(-0.14, 0.14);
        obj.center.y() = rng.uniform(-0.18, 0.18);
        obj.center.z() = lift;
        obj.yaw = rng.uniform(-3.14159, 3.14159);
    }
    s.camera_eye += Eigen::Vector3d(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
    return s;
}

SceneImages synth_scene(const SceneSpec& spec) {
    spec.validate();
    const CameraIntrinsics& cam = spec.camera;
    const Eigen::Matrix3d rot = camera_rotation(spec);
    const Eigen::Vector3d light = spec.light_dir.normalized();
    SceneImages out{RgbImage(cam.width, cam.height), DepthImage(cam.width, cam.height)};
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            // Camera-frame direction with unit z, so the hit parameter is the depth.
            const Eigen::Vector3d dir_cam((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
            const Eigen::Vector3d dir = rot * dir_cam;
            Hit best;
            hit_table(spec, spec.camera_eye, dir, best);
            for (const auto& obj : spec.objects) {
                if (obj.kind == Primitive::Kind::Sphere)
                    hit_sphere(obj, spec.camera_eye, dir, best);
                else
                    hit_box(obj, spec.camera_eye, dir, best);
            }
            if (best.t == kNoHit) continue;
            out.depth.at(u, v) = static_cast<float>(best.t);
            const float shade = static_cast<float>(0.35 + 0.65 * std::max(0.0, best.normal.dot(light)));
            out.rgb.at(u, v) = (best.color * shade).cwiseMin(1.0f).cwiseMax(0.0f);
        }
    }
    return out;
}

}  // namespace any3d::datapipe
