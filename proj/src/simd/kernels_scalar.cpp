#include "any3d/simd/kernels.hpp"

#include <cmath>

namespace any3d::simd {
namespace {

void backproject(const PinholeParams& cam, const double* u, const double* v, const double* d,
                 double* x, double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (u[i] - cam.cx) * d[i] / cam.fx;
        y[i] = (v[i] - cam.cy) * d[i] / cam.fy;
        z[i] = d[i];
    }
}

void project(const PinholeParams& cam, const double* x, const double* y, const double* z,
             double* u, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = cam.fx * x[i] / z[i] + cam.cx;
        v[i] = cam.fy * y[i] / z[i] + cam.cy;
    }
}

void crop_mask(const CropBounds& b, const double* x, const double* y, const double* z,
               std::uint8_t* keep, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(x[i] * x[i] + z[i] * z[i]);
        const bool ok = y[i] >= b.y_min && y[i] <= b.y_max && r <= b.radius_xz_max &&
                        z[i] >= b.z_min && z[i] <= b.z_max;
        keep[i] = ok ? 1 : 0;
    }
}

void voxel_floor(const double* in, double g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::floor(in[i] / g);
}

void scatter_add(double* acc, const float* src, std::size_t dim) {
    for (std::size_t k = 0; k < dim; ++k) acc[k] += static_cast<double>(src[k]);
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Level::Scalar, backproject, project,     crop_mask,
                                   voxel_floor,   scatter_add, dot};
    return table;
}

}  // namespace any3d::simd
