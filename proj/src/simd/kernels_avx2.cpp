#include "any3d/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

namespace any3d::simd {
namespace {

constexpr std::size_t kLanes = 4;

void backproject(const PinholeParams& cam, const double* u, const double* v, const double* d,
                 double* x, double* y, double* z, std::size_t n) {
    const __m256d fx = _mm256_set1_pd(cam.fx), fy = _mm256_set1_pd(cam.fy);
    const __m256d cx = _mm256_set1_pd(cam.cx), cy = _mm256_set1_pd(cam.cy);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d dd = _mm256_loadu_pd(d + i);
        const __m256d xu = _mm256_div_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(u + i), cx), dd), fx);
        const __m256d yv = _mm256_div_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), cy), dd), fy);
        _mm256_storeu_pd(x + i, xu);
        _mm256_storeu_pd(y + i, yv);
        _mm256_storeu_pd(z + i, dd);
    }
    for (; i < n; ++i) {
        x[i] = (u[i] - cam.cx) * d[i] / cam.fx;
        y[i] = (v[i] - cam.cy) * d[i] / cam.fy;
        z[i] = d[i];
    }
}

void project(const PinholeParams& cam, const double* x, const double* y, const double* z,
             double* u, double* v, std::size_t n) {
    const __m256d fx = _mm256_set1_pd(cam.fx), fy = _mm256_set1_pd(cam.fy);
    const __m256d cx = _mm256_set1_pd(cam.cx), cy = _mm256_set1_pd(cam.cy);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d zz = _mm256_loadu_pd(z + i);
        const __m256d uu = _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fx, _mm256_loadu_pd(x + i)), zz), cx);
        const __m256d vv = _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fy, _mm256_loadu_pd(y + i)), zz), cy);
        _mm256_storeu_pd(u + i, uu);
        _mm256_storeu_pd(v + i, vv);
    }
    for (; i < n; ++i) {
        u[i] = cam.fx * x[i] / z[i] + cam.cx;
        v[i] = cam.fy * y[i] / z[i] + cam.cy;
    }
}

void crop_mask(const CropBounds& b, const double* x, const double* y, const double* z,
               std::uint8_t* keep, std::size_t n) {
    const __m256d ylo = _mm256_set1_pd(b.y_min), yhi = _mm256_set1_pd(b.y_max);
    const __m256d zlo = _mm256_set1_pd(b.z_min), zhi = _mm256_set1_pd(b.z_max);
    const __m256d rmax = _mm256_set1_pd(b.radius_xz_max);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d xx = _mm256_loadu_pd(x + i);
        const __m256d yy = _mm256_loadu_pd(y + i);
        const __m256d zz = _mm256_loadu_pd(z + i);
        const __m256d r = _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(xx, xx), _mm256_mul_pd(zz, zz)));
        __m256d m = _mm256_and_pd(_mm256_cmp_pd(yy, ylo, _CMP_GE_OQ), _mm256_cmp_pd(yy, yhi, _CMP_LE_OQ));
        m = _mm256_and_pd(m, _mm256_cmp_pd(r, rmax, _CMP_LE_OQ));
        m = _mm256_and_pd(m, _mm256_cmp_pd(zz, zlo, _CMP_GE_OQ));
        m = _mm256_and_pd(m, _mm256_cmp_pd(zz, zhi, _CMP_LE_OQ));
        const int bits = _mm256_movemask_pd(m);
        for (std::size_t l = 0; l < kLanes; ++l) keep[i + l] = static_cast<std::uint8_t>((bits >> l) & 1);
    }
    for (; i < n; ++i) {
        const double r = std::sqrt(x[i] * x[i] + z[i] * z[i]);
        keep[i] = (y[i] >= b.y_min && y[i] <= b.y_max && r <= b.radius_xz_max &&
                   z[i] >= b.z_min && z[i] <= b.z_max) ? 1 : 0;
    }
}

void voxel_floor(const double* in, double g, double* out, std::size_t n) {
    const __m256d gg = _mm256_set1_pd(g);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d q = _mm256_div_pd(_mm256_loadu_pd(in + i), gg);
        _mm256_storeu_pd(out + i, _mm256_round_pd(q, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC));
    }
    for (; i < n; ++i) out[i] = std::floor(in[i] / g);
}

void scatter_add(double* acc, const float* src, std::size_t dim) {
    std::size_t k = 0;
    for (; k + kLanes <= dim; k += kLanes) {
        const __m256d s = _mm256_cvtps_pd(_mm_loadu_ps(src + k));
        _mm256_storeu_pd(acc + k, _mm256_add_pd(_mm256_loadu_pd(acc + k), s));
    }
    for (; k < dim; ++k) acc[k] += static_cast<double>(src[k]);
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 2 * kLanes <= n; k += 2 * kLanes) {
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
        s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(a + k + kLanes), _mm256_loadu_pd(b + k + kLanes)));
    }
    for (; k + kLanes <= n; k += kLanes)
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
    s0 = _mm256_add_pd(s0, s1);
    const __m128d lo = _mm256_castpd256_pd128(s0);
    const __m128d hi = _mm256_extractf128_pd(s0, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{Level::Avx2, backproject, project,     crop_mask,
                                   voxel_floor, scatter_add, dot};
    return &table;
}

}  // namespace any3d::simd

#else

namespace any3d::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace any3d::simd

#endif
