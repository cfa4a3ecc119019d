#pragma once

// Data-parallel inner loops shared by the geometry, compression, alignment
// and fusion modules. Every kernel has a scalar reference implementation;
// vector variants are selected once at runtime by CPU feature detection.
//
// The elementwise kernels (backproject, project, crop_mask, voxel_floor,
// scatter_add) use only correctly rounded IEEE operations in the same order
// as the scalar reference, so every variant is bit-identical to it. The
// reductions (dot) reassociate and agree only to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace any3d::simd {

enum class Level { Scalar, Avx2, Neon };

std::string_view level_name(Level level);

struct PinholeParams {
    double fx, fy, cx, cy;
};

struct CropBounds {
    double y_min, y_max, radius_xz_max, z_min, z_max;
};

struct KernelTable {
    Level level;

    // x = (u - cx) * d / fx, y = (v - cy) * d / fy, z = d.
    void (*backproject)(const PinholeParams& cam, const double* u, const double* v,
                        const double* d, double* x, double* y, double* z, std::size_t n);

    // u = fx * x / z + cx, v = fy * y / z + cy.
    void (*project)(const PinholeParams& cam, const double* x, const double* y,
                    const double* z, double* u, double* v, std::size_t n);

    // keep[i] = 1 iff y in [y_min, y_max], sqrt(x^2 + z^2) <= r, z in [z_min, z_max].
    void (*crop_mask)(const CropBounds& bounds, const double* x, const double* y,
                      const double* z, std::uint8_t* keep, std::size_t n);

    // out[i] = floor(in[i] / g).
    void (*voxel_floor)(const double* in, double g, double* out, std::size_t n);

    // acc[k] += double(src[k]) for k < dim.
    void (*scatter_add)(double* acc, const float* src, std::size_t dim);

    // sum_k a[k] * b[k].
    double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();

// Vector tables compiled into this build whose instructions the running CPU
// supports, best first. Always ends with the scalar table.
std::vector<const KernelTable*> available_kernels();

// The table used by the library. Chosen on first use: the best available
// level unless the environment variable ANY3D_SIMD names another one
// ("scalar", "avx2", "neon").
const KernelTable& active_kernels();

}  // namespace any3d::simd
