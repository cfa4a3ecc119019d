#pragma once

// Gated residual 2D-3D token fusion:
//   h3d   = W_3D g3d + b_3D
//   delta = W2 gelu(W1 [h2d; h3d] + b1) + b2
//   fused = h2d + sigmoid(gate) * LayerNorm(delta)
// with an analytic backward pass. The forward pass is templated on the
// scalar type so gradient checks can difference it in extended precision.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "any3d/alignment.hpp"
#include "any3d/error.hpp"
#include "any3d/geometry.hpp"
#include "any3d/simd/kernels.hpp"

namespace any3d::fusion {

// sigmoid(-2.1972) = 0.1000 (to 4 decimals).
constexpr double kGateInit = -2.1972;
constexpr double kLayerNormEps = 1e-5;

// Widths of the full-scale encoders the stubs stand in for: DINOv2 + SigLIP
// patch tokens and per-point Concerto features.
constexpr std::size_t kFullScale2dDim = 2176;
constexpr std::size_t kFullScale3dDim = 1728;

struct FusionDims {
    std::size_t dtok = 32;
    std::size_t d3 = 24;
    std::size_t hidden = 64;
    bool operator==(const FusionDims&) const = default;
};

template <typename T>
struct BasicFusionParams {
    FusionDims dims;
    std::vector<T> w3d;       // dtok x d3, row-major
    std::vector<T> b3d;       // dtok
    std::vector<T> w1;        // hidden x 2 dtok
    std::vector<T> b1;        // hidden
    std::vector<T> w2;        // dtok x hidden
    std::vector<T> b2;        // dtok
    std::vector<T> ln_scale;  // dtok
    std::vector<T> ln_shift;  // dtok
    T ln_eps = static_cast<T>(kLayerNormEps);
    T gate = static_cast<T>(kGateInit);

    // Every field as a named flat block, in checkpoint order.
    template <typename F>
    void for_each_block(F&& f) {
        f(std::string_view("W_3D"), std::span<T>(w3d));
        f(std::string_view("b_3D"), std::span<T>(b3d));
        f(std::string_view("mlp.W1"), std::span<T>(w1));
        f(std::string_view("mlp.b1"), std::span<T>(b1));
        f(std::string_view("mlp.W2"), std::span<T>(w2));
        f(std::string_view("mlp.b2"), std::span<T>(b2));
        f(std::string_view("ln_scale"), std::span<T>(ln_scale));
        f(std::string_view("ln_shift"), std::span<T>(ln_shift));
        f(std::string_view("ln_eps"), std::span<T>(&ln_eps, 1));
        f(std::string_view("gate"), std::span<T>(&gate, 1));
    }
    template <typename F>
    void for_each_block(F&& f) const {
        const_cast<BasicFusionParams*>(this)->for_each_block(
            [&](std::string_view name, std::span<T> block) { f(name, std::span<const T>(block)); });
    }

    // Zero-valued parameters with the shapes implied by dims.
    static BasicFusionParams zeros(const FusionDims& dims) {
        BasicFusionParams p;
        p.dims = dims;
        p.w3d.assign(dims.dtok * dims.d3, T(0));
        p.b3d.assign(dims.dtok, T(0));
        p.w1.assign(dims.hidden * 2 * dims.dtok, T(0));
        p.b1.assign(dims.hidden, T(0));
        p.w2.assign(dims.dtok * dims.hidden, T(0));
        p.b2.assign(dims.dtok, T(0));
        p.ln_scale.assign(dims.dtok, T(0));
        p.ln_shift.assign(dims.dtok, T(0));
        p.ln_eps = T(0);
        p.gate = T(0);
        return p;
    }

    template <typename U>
    BasicFusionParams<U> cast() const {
        auto out = BasicFusionParams<U>::zeros(dims);
        auto src = *this;
        std::vector<std::span<T>> from;
        src.for_each_block([&](std::string_view, std::span<T> b) { from.push_back(b); });
        std::size_t i = 0;
        out.for_each_block([&](std::string_view, std::span<U> b) {
            for (std::size_t k = 0; k < b.size(); ++k) b[k] = static_cast<U>(from[i][k]);
            ++i;
        });
        return out;
    }

    void validate() const {
        require(dims.dtok > 0 && dims.d3 > 0 && dims.hidden > 0, "fusion: dimensions must be positive");
        require(w3d.size() == dims.dtok * dims.d3 && b3d.size() == dims.dtok &&
                    w1.size() == dims.hidden * 2 * dims.dtok && b1.size() == dims.hidden &&
                    w2.size() == dims.dtok * dims.hidden && b2.size() == dims.dtok &&
                    ln_scale.size() == dims.dtok && ln_shift.size() == dims.dtok,
                "fusion: parameter shapes inconsistent with dims");
        require(ln_eps > T(0), "fusion: ln_eps must be positive");
        bool finite = true;
        for_each_block([&](std::string_view, std::span<const T> b) {
            for (T v : b) finite = finite && std::isfinite(v);
        });
        require(finite, "fusion: non-finite parameter");
    }
};

using FusionParams = BasicFusionParams<double>;

// Seeded initialization: scaled Gaussian weights, zero biases, identity
// LayerNorm affine, gate at kGateInit.
FusionParams init_params(const FusionDims& dims, std::uint64_t seed);

// Per-patch token vectors, row-major (token j occupies [j * dim, (j + 1) * dim)).
template <typename T>
struct BasicTokens {
    int rows = 0;
    int cols = 0;
    std::size_t dim = 0;
    std::vector<T> values;

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    std::span<const T> token(std::size_t j) const { return std::span<const T>(values).subspan(j * dim, dim); }
    std::span<T> token(std::size_t j) { return std::span<T>(values).subspan(j * dim, dim); }

    void validate() const {
        require(rows > 0 && cols > 0 && dim > 0, "tokens: shape must be positive");
        require(values.size() == size() * dim, "tokens: value count does not match shape");
        for (T v : values) require(std::isfinite(v), "tokens: non-finite entry");
    }

    template <typename U>
    BasicTokens<U> cast() const {
        return {rows, cols, dim, std::vector<U>(values.begin(), values.end())};
    }
};

using TokenSequence = BasicTokens<double>;

// Patch features as tokens (float storage widened to double).
TokenSequence tokens_from_patch_features(const PatchFeatureGrid& grid);

template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Gaussian-error linear unit, exact form x * Phi(x).
template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad(T x) {
    const T phi = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::acos(T(-1)));
    return T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2)))) + x * phi;
}

namespace detail {

template <typename T>
T dot(const T* a, const T* b, std::size_t n, const simd::KernelTable& kernels) {
    if constexpr (std::is_same_v<T, double>) {
        return kernels.dot(a, b, n);
    } else {
        T s = T(0);
        for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
        return s;
    }
}

// y = W x + b, W row-major (out x in).
template <typename T>
void affine(const std::vector<T>& w, const std::vector<T>& b, const T* x, std::size_t in, T* y,
            const simd::KernelTable& kernels) {
    const std::size_t out = b.size();
    for (std::size_t o = 0; o < out; ++o) y[o] = dot(w.data() + o * in, x, in, kernels) + b[o];
}

// Intermediate values of one token's forward pass.
template <typename T>
struct TokenTrace {
    std::vector<T> x;      // [h2d; h3d]
    std::vector<T> a1;     // pre-activation
    std::vector<T> z1;     // gelu(a1)
    std::vector<T> delta;
    std::vector<T> xhat;   // normalized delta
    T inv_std = T(0);
    std::vector<T> ln;     // xhat * scale + shift
};

template <typename T>
void trace_token(const T* h2d, const T* h3d, const BasicFusionParams<T>& p, TokenTrace<T>& t,
                 const simd::KernelTable& kernels) {
    const std::size_t dt = p.dims.dtok, hid = p.dims.hidden;
    t.x.resize(2 * dt);
    std::copy(h2d, h2d + dt, t.x.begin());
    std::copy(h3d, h3d + dt, t.x.begin() + dt);
    t.a1.resize(hid);
    t.z1.resize(hid);
    affine(p.w1, p.b1, t.x.data(), 2 * dt, t.a1.data(), kernels);
    for (std::size_t h = 0; h < hid; ++h) t.z1[h] = gelu(t.a1[h]);
    t.delta.resize(dt);
    affine(p.w2, p.b2, t.z1.data(), hid, t.delta.data(), kernels);

    T mean = T(0);
    for (T d : t.delta) mean += d;
    mean /= static_cast<T>(dt);
    T var = T(0);
    for (T d : t.delta) var += (d - mean) * (d - mean);
    var /= static_cast<T>(dt);
    t.inv_std = T(1) / std::sqrt(var + p.ln_eps);
    t.xhat.resize(dt);
    t.ln.resize(dt);
    for (std::size_t k = 0; k < dt; ++k) {
        t.xhat[k] = (t.delta[k] - mean) * t.inv_std;
        t.ln[k] = t.xhat[k] * p.ln_scale[k] + p.ln_shift[k];
    }
}

}  // namespace detail

// h3d_j = W_3D g3d_j + b_3D for every patch, empty-token patches included.
template <typename T>
BasicTokens<T> project_3d_tokens(const BasicTokens<T>& g3d, const BasicFusionParams<T>& p,
                                 const simd::KernelTable& kernels = simd::active_kernels()) {
    require(g3d.dim == p.dims.d3, "project_3d_tokens: feature dimension does not match W_3D");
    require(g3d.values.size() == g3d.size() * g3d.dim, "project_3d_tokens: malformed feature grid");
    BasicTokens<T> out{g3d.rows, g3d.cols, p.dims.dtok, std::vector<T>(g3d.size() * p.dims.dtok)};
    for (std::size_t j = 0; j < g3d.size(); ++j)
        detail::affine(p.w3d, p.b3d, g3d.values.data() + j * g3d.dim, g3d.dim,
                       out.values.data() + j * p.dims.dtok, kernels);
    return out;
}

// fused_j = h2d_j + gate_value * LayerNorm(MLP([h2d_j; h3d_j])). fuse() passes
// gate_value = sigmoid(p.gate).
template <typename T>
BasicTokens<T> fuse_with_gate_value(const BasicTokens<T>& h2d, const BasicTokens<T>& h3d,
                                    const BasicFusionParams<T>& p, T gate_value,
                                    const simd::KernelTable& kernels = simd::active_kernels()) {
    require(h2d.rows == h3d.rows && h2d.cols == h3d.cols && h2d.dim == h3d.dim,
            "fuse: 2D and 3D token shapes differ");
    require(h2d.dim == p.dims.dtok, "fuse: token dimension does not match parameters");
    require(h2d.values.size() == h2d.size() * h2d.dim && h3d.values.size() == h3d.size() * h3d.dim,
            "fuse: malformed token sequence");
    BasicTokens<T> out = h2d;
    detail::TokenTrace<T> t;
    for (std::size_t j = 0; j < h2d.size(); ++j) {
        detail::trace_token(h2d.values.data() + j * h2d.dim, h3d.values.data() + j * h3d.dim, p, t, kernels);
        T* dst = out.values.data() + j * out.dim;
        for (std::size_t k = 0; k < out.dim; ++k) dst[k] += gate_value * t.ln[k];
    }
    return out;
}

template <typename T>
BasicTokens<T> fuse(const BasicTokens<T>& h2d, const BasicTokens<T>& h3d, const BasicFusionParams<T>& p,
                    const simd::KernelTable& kernels = simd::active_kernels()) {
    return fuse_with_gate_value(h2d, h3d, p, sigmoid(p.gate), kernels);
}

// Scalar loss <upstream, fused(h2d, W_3D g3d + b_3D)>; the function the
// gradient checks difference.
template <typename T>
T fusion_objective(const BasicTokens<T>& h2d, const BasicTokens<T>& g3d, const BasicFusionParams<T>& p,
                   const BasicTokens<T>& upstream,
                   const simd::KernelTable& kernels = simd::active_kernels()) {
    const auto fused = fuse(h2d, project_3d_tokens(g3d, p, kernels), p, kernels);
    require(upstream.values.size() == fused.values.size(), "fusion_objective: upstream shape mismatch");
    T s = T(0);
    for (std::size_t i = 0; i < fused.values.size(); ++i) s += upstream.values[i] * fused.values[i];
    return s;
}

// Gradients of L = <upstream, fused> for every input and parameter.
struct FusionGradients {
    TokenSequence h2d;
    TokenSequence h3d;
    TokenSequence g3d;
    FusionParams params;  // same layout as the parameters, holding dL/dparam
};

FusionGradients fuse_backward(const TokenSequence& h2d, const TokenSequence& g3d, const FusionParams& p,
                              const TokenSequence& upstream,
                              const simd::KernelTable& kernels = simd::active_kernels());

// dL/d(empty token): the sum of the g3d gradients over empty patches.
std::vector<double> empty_token_gradient(const FusionGradients& grads, std::span<const std::uint8_t> empty_mask);

// Deterministic stand-in for the frozen image encoders: per patch, the mean
// RGB and a sinusoidal position code, embedded to dtok by a seeded matrix.
TokenSequence stub_encode_2d(const RgbImage& rgb, const PatchGrid& grid, std::size_t dtok, std::uint64_t seed);

// Deterministic stand-in for the point encoder: tanh of a seeded affine map of
// [xyz, rgb, normal]; returns size() rows of d3 floats.
std::vector<float> stub_encode_3d(const PointCloud& cloud, std::size_t d3, std::uint64_t seed);

// Flat binary checkpoint: uint32 LE (dtok, d3, hidden), then float32 LE blocks
// in for_each_block order. A JSON manifest with shapes and a content hash is
// written next to it as <path>.json.
void write_checkpoint(const std::string& path, const FusionParams& params);
FusionParams read_checkpoint(const std::string& path);

}  // namespace any3d::fusion
