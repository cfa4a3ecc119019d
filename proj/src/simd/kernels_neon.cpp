#include "any3d/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

namespace any3d::simd {
namespace {

constexpr std::size_t kLanes = 2;

void backproject(const PinholeParams& cam, const double* u, const double* v, const double* d,
                 double* x, double* y, double* z, std::size_t n) {
    const float64x2_t fx = vdupq_n_f64(cam.fx), fy = vdupq_n_f64(cam.fy);
    const float64x2_t cx = vdupq_n_f64(cam.cx), cy = vdupq_n_f64(cam.cy);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t dd = vld1q_f64(d + i);
        vst1q_f64(x + i, vdivq_f64(vmulq_f64(vsubq_f64(vld1q_f64(u + i), cx), dd), fx));
        vst1q_f64(y + i, vdivq_f64(vmulq_f64(vsubq_f64(vld1q_f64(v + i), cy), dd), fy));
        vst1q_f64(z + i, dd);
    }
    for (; i < n; ++i) {
        x[i] = (u[i] - cam.cx) * d[i] / cam.fx;
        y[i] = (v[i] - cam.cy) * d[i] / cam.fy;
        z[i] = d[i];
    }
}

void project(const PinholeParams& cam, const double* x, const double* y, const double* z,
             double* u, double* v, std::size_t n) {
    const float64x2_t fx = vdupq_n_f64(cam.fx), fy = vdupq_n_f64(cam.fy);
    const float64x2_t cx = vdupq_n_f64(cam.cx), cy = vdupq_n_f64(cam.cy);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t zz = vld1q_f64(z + i);
        vst1q_f64(u + i, vaddq_f64(vdivq_f64(vmulq_f64(fx, vld1q_f64(x + i)), zz), cx));
        vst1q_f64(v + i, vaddq_f64(vdivq_f64(vmulq_f64(fy, vld1q_f64(y + i)), zz), cy));
    }
    for (; i < n; ++i) {
        u[i] = cam.fx * x[i] / z[i] + cam.cx;
        v[i] = cam.fy * y[i] / z[i] + cam.cy;
    }
}

void crop_mask(const CropBounds& b, const double* x, const double* y, const double* z,
               std::uint8_t* keep, std::size_t n) {
    const float64x2_t ylo = vdupq_n_f64(b.y_min), yhi = vdupq_n_f64(b.y_max);
    const float64x2_t zlo = vdupq_n_f64(b.z_min), zhi = vdupq_n_f64(b.z_max);
    const float64x2_t rmax = vdupq_n_f64(b.radius_xz_max);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t xx = vld1q_f64(x + i);
        const float64x2_t yy = vld1q_f64(y + i);
        const float64x2_t zz = vld1q_f64(z + i);
        const float64x2_t r = vsqrtq_f64(vaddq_f64(vmulq_f64(xx, xx), vmulq_f64(zz, zz)));
        uint64x2_t m = vandq_u64(vcgeq_f64(yy, ylo), vcleq_f64(yy, yhi));
        m = vandq_u64(m, vcleq_f64(r, rmax));
        m = vandq_u64(m, vcgeq_f64(zz, zlo));
        m = vandq_u64(m, vcleq_f64(zz, zhi));
        keep[i] = static_cast<std::uint8_t>(vgetq_lane_u64(m, 0) & 1);
        keep[i + 1] = static_cast<std::uint8_t>(vgetq_lane_u64(m, 1) & 1);
    }
    for (; i < n; ++i) {
        const double r = std::sqrt(x[i] * x[i] + z[i] * z[i]);
        keep[i] = (y[i] >= b.y_min && y[i] <= b.y_max && r <= b.radius_xz_max &&
                   z[i] >= b.z_min && z[i] <= b.z_max) ? 1 : 0;
    }
}

void voxel_floor(const double* in, double g, double* out, std::size_t n) {
    const float64x2_t gg = vdupq_n_f64(g);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vrndmq_f64(vdivq_f64(vld1q_f64(in + i), gg)));
    for (; i < n; ++i) out[i] = std::floor(in[i] / g);
}

void scatter_add(double* acc, const float* src, std::size_t dim) {
    std::size_t k = 0;
    for (; k + kLanes <= dim; k += kLanes)
        vst1q_f64(acc + k, vaddq_f64(vld1q_f64(acc + k), vcvt_f64_f32(vld1_f32(src + k))));
    for (; k < dim; ++k) acc[k] += static_cast<double>(src[k]);
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 * kLanes <= n; k += 2 * kLanes) {
        s0 = vaddq_f64(s0, vmulq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
        s1 = vaddq_f64(s1, vmulq_f64(vld1q_f64(a + k + kLanes), vld1q_f64(b + k + kLanes)));
    }
    double s = vaddvq_f64(vaddq_f64(s0, s1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

const KernelTable* neon_kernels() {
    static const KernelTable table{Level::Neon, backproject, project,     crop_mask,
                                   voxel_floor, scatter_add, dot};
    return &table;
}

}  // namespace any3d::simd

#else

namespace any3d::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace any3d::simd

#endif
