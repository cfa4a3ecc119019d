#include "any3d/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "any3d/binio.hpp"
#include "any3d/rng.hpp"

namespace any3d::fusion {

FusionParams init_params(const FusionDims& dims, std::uint64_t seed) {
    auto p = FusionParams::zeros(dims);
    CounterRng rng(seed);
    auto gaussian = [](CounterRng r, std::vector<double>& w, double fan_in) {
        const double scale = 1.0 / std::sqrt(fan_in);
        for (double& v : w) v = scale * r.normal();
    };
    gaussian(rng.split(1), p.w3d, static_cast<double>(dims.d3));
    gaussian(rng.split(2), p.w1, static_cast<double>(2 * dims.dtok));
    gaussian(rng.split(3), p.w2, static_cast<double>(dims.hidden));
    std::fill(p.ln_scale.begin(), p.ln_scale.end(), 1.0);
    p.ln_eps = kLayerNormEps;
    p.gate = kGateInit;
    return p;
}

TokenSequence tokens_from_patch_features(const PatchFeatureGrid& grid) {
    return {grid.rows, grid.cols, grid.dim, std::vector<double>(grid.features.begin(), grid.features.end())};
}

FusionGradients fuse_backward(const TokenSequence& h2d, const TokenSequence& g3d, const FusionParams& p,
                              const TokenSequence& upstream, const simd::KernelTable& kernels) {
    p.validate();
    const std::size_t dt = p.dims.dtok, hid = p.dims.hidden, d3 = p.dims.d3;
    require(h2d.dim == dt && g3d.dim == d3 && upstream.dim == dt, "fuse_backward: dimension mismatch");
    require(h2d.rows == g3d.rows && h2d.cols == g3d.cols && h2d.rows == upstream.rows && h2d.cols == upstream.cols,
            "fuse_backward: token grid shapes differ");
    require(h2d.values.size() == h2d.size() * dt && g3d.values.size() == g3d.size() * d3 &&
                upstream.values.size() == upstream.size() * dt,
            "fuse_backward: malformed token sequence");

    const TokenSequence h3d = project_3d_tokens(g3d, p, kernels);
    const double s = sigmoid(p.gate);
    const double ds_dgate = s * (1.0 - s);

    FusionGradients g{TokenSequence{h2d.rows, h2d.cols, dt, std::vector<double>(h2d.values.size())},
                      TokenSequence{h2d.rows, h2d.cols, dt, std::vector<double>(h2d.values.size())},
                      TokenSequence{g3d.rows, g3d.cols, d3, std::vector<double>(g3d.values.size())},
                      FusionParams::zeros(p.dims)};
    FusionParams& gp = g.params;

    detail::TokenTrace<double> t;
    std::vector<double> dxhat(dt), ddelta(dt), dz1(hid), da1(hid), dx(2 * dt);
    for (std::size_t j = 0; j < h2d.size(); ++j) {
        const double* up = upstream.values.data() + j * dt;
        detail::trace_token(h2d.values.data() + j * dt, h3d.values.data() + j * dt, p, t, kernels);

        // fused = h2d + s * ln
        double up_dot_ln = 0.0;
        for (std::size_t k = 0; k < dt; ++k) up_dot_ln += up[k] * t.ln[k];
        gp.gate += ds_dgate * up_dot_ln;

        // ln = xhat * scale + shift
        for (std::size_t k = 0; k < dt; ++k) {
            const double dln = s * up[k];
            gp.ln_scale[k] += dln * t.xhat[k];
            gp.ln_shift[k] += dln;
            dxhat[k] = dln * p.ln_scale[k];
        }

        // xhat = (delta - mean) * inv_std, inv_std = (var + eps)^(-1/2)
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t k = 0; k < dt; ++k) {
            mean_dxhat += dxhat[k];
            mean_dxhat_xhat += dxhat[k] * t.xhat[k];
        }
        mean_dxhat /= static_cast<double>(dt);
        mean_dxhat_xhat /= static_cast<double>(dt);
        for (std::size_t k = 0; k < dt; ++k)
            ddelta[k] = t.inv_std * (dxhat[k] - mean_dxhat - t.xhat[k] * mean_dxhat_xhat);
        // d xhat_k / d eps = -1/2 * xhat_k * inv_std^2
        gp.ln_eps += -0.5 * t.inv_std * t.inv_std * mean_dxhat_xhat * static_cast<double>(dt);

        // delta = W2 z1 + b2
        std::fill(dz1.begin(), dz1.end(), 0.0);
        for (std::size_t o = 0; o < dt; ++o) {
            gp.b2[o] += ddelta[o];
            double* gw = gp.w2.data() + o * hid;
            const double* w = p.w2.data() + o * hid;
            for (std::size_t h = 0; h < hid; ++h) {
                gw[h] += ddelta[o] * t.z1[h];
                dz1[h] += w[h] * ddelta[o];
            }
        }

        // z1 = gelu(a1), a1 = W1 x + b1
        for (std::size_t h = 0; h < hid; ++h) da1[h] = dz1[h] * gelu_grad(t.a1[h]);
        std::fill(dx.begin(), dx.end(), 0.0);
        for (std::size_t h = 0; h < hid; ++h) {
            gp.b1[h] += da1[h];
            double* gw = gp.w1.data() + h * 2 * dt;
            const double* w = p.w1.data() + h * 2 * dt;
            for (std::size_t i = 0; i < 2 * dt; ++i) {
                gw[i] += da1[h] * t.x[i];
                dx[i] += w[i] * da1[h];
            }
        }

        double* gh2d = g.h2d.values.data() + j * dt;
        double* gh3d = g.h3d.values.data() + j * dt;
        for (std::size_t k = 0; k < dt; ++k) {
            gh2d[k] = up[k] + dx[k];
            gh3d[k] = dx[dt + k];
        }

        // h3d = W_3D g3d + b_3D
        const double* gin = g3d.values.data() + j * d3;
        double* gg = g.g3d.values.data() + j * d3;
        for (std::size_t o = 0; o < dt; ++o) {
            gp.b3d[o] += gh3d[o];
            double* gw = gp.w3d.data() + o * d3;
            const double* w = p.w3d.data() + o * d3;
            for (std::size_t i = 0; i < d3; ++i) {
                gw[i] += gh3d[o] * gin[i];
                gg[i] += w[i] * gh3d[o];
            }
        }
    }
    return g;
}

std::vector<double> empty_token_gradient(const FusionGradients& grads, std::span<const std::uint8_t> empty_mask) {
    require(empty_mask.size() == grads.g3d.size(), "empty_token_gradient: mask length mismatch");
    std::vector<double> out(grads.g3d.dim, 0.0);
    for (std::size_t j = 0; j < empty_mask.size(); ++j) {
        if (!empty_mask[j]) continue;
        const auto row = grads.g3d.token(j);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
    }
    return out;
}

namespace {

constexpr std::size_t kPosFrequencies = 2;
constexpr std::size_t kStubInputs2d = 3 + 4 * kPosFrequencies;

void position_code(double row, double col, double rows, double cols, double* out) {
    for (std::size_t f = 0; f < kPosFrequencies; ++f) {
        const double w = std::numbers::pi * static_cast<double>(1u << f);
        out[4 * f + 0] = std::sin(w * (row + 0.5) / rows);
        out[4 * f + 1] = std::cos(w * (row + 0.5) / rows);
        out[4 * f + 2] = std::sin(w * (col + 0.5) / cols);
        out[4 * f + 3] = std::cos(w * (col + 0.5) / cols);
    }
}

}  // namespace

TokenSequence stub_encode_2d(const RgbImage& rgb, const PatchGrid& grid, std::size_t dtok, std::uint64_t seed) {
    grid.validate();
    require(rgb.width == grid.image_width && rgb.height == grid.image_height,
            "stub_encode_2d: image does not match the patch grid");
    require(dtok > 0, "stub_encode_2d: dtok must be positive");

    std::vector<double> embed(dtok * kStubInputs2d);
    CounterRng rng(hash_combine(seed, 0x2d));
    for (double& w : embed) w = rng.normal() / std::sqrt(static_cast<double>(kStubInputs2d));

    TokenSequence out{grid.rows, grid.cols, dtok, std::vector<double>(grid.size() * dtok)};
    double feat[kStubInputs2d];
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            double sum[3] = {0.0, 0.0, 0.0};
            std::size_t count = 0;
            const int v1 = std::min((r + 1) * grid.patch_px, rgb.height);
            const int u1 = std::min((c + 1) * grid.patch_px, rgb.width);
            for (int v = r * grid.patch_px; v < v1; ++v) {
                for (int u = c * grid.patch_px; u < u1; ++u) {
                    const auto& px = rgb.at(u, v);
                    for (int ch = 0; ch < 3; ++ch) sum[ch] += px[ch];
                    ++count;
                }
            }
            for (int ch = 0; ch < 3; ++ch) feat[ch] = count ? sum[ch] / static_cast<double>(count) : 0.0;
            position_code(r, c, grid.rows, grid.cols, feat + 3);

            double* dst = out.values.data() + (static_cast<std::size_t>(r) * grid.cols + c) * dtok;
            for (std::size_t o = 0; o < dtok; ++o) {
                double acc = 0.0;
                for (std::size_t i = 0; i < kStubInputs2d; ++i) acc += embed[o * kStubInputs2d + i] * feat[i];
                dst[o] = acc;
            }
        }
    }
    return out;
}

std::vector<float> stub_encode_3d(const PointCloud& cloud, std::size_t d3, std::uint64_t seed) {
    require(d3 > 0, "stub_encode_3d: d3 must be positive");
    constexpr std::size_t kIn = 9;
    std::vector<double> w(d3 * kIn), b(d3);
    CounterRng rng(hash_combine(seed, 0x3d));
    for (double& v : w) v = rng.normal();
    for (double& v : b) v = 0.1 * rng.normal();

    std::vector<float> out(cloud.size() * d3);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double q[kIn];
        for (int a = 0; a < 3; ++a) {
            q[a] = cloud.coords[i][a];
            q[3 + a] = cloud.colors[i][a];
            q[6 + a] = cloud.has_normals() ? cloud.normals[i][a] : 0.0;
        }
        for (std::size_t o = 0; o < d3; ++o) {
            double acc = b[o];
            for (std::size_t k = 0; k < kIn; ++k) acc += w[o * kIn + k] * q[k];
            out[i * d3 + o] = static_cast<float>(std::tanh(acc));
        }
    }
    return out;
}

namespace {

std::string content_hash(std::span<const std::uint8_t> bytes) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()))));
    return hex;
}

}  // namespace

void write_checkpoint(const std::string& path, const FusionParams& params) {
    params.validate();
    std::vector<std::uint8_t> bytes;
    io::put_le(bytes, static_cast<std::uint32_t>(params.dims.dtok));
    io::put_le(bytes, static_cast<std::uint32_t>(params.dims.d3));
    io::put_le(bytes, static_cast<std::uint32_t>(params.dims.hidden));
    nlohmann::json blocks = nlohmann::json::array();
    params.for_each_block([&](std::string_view name, std::span<const double> block) {
        blocks.push_back({{"name", name}, {"offset", bytes.size()}, {"count", block.size()}});
        for (double v : block) io::put_le(bytes, static_cast<float>(v));
    });
    const auto& d = params.dims;
    const nlohmann::json shapes = {
        {"W_3D", {d.dtok, d.d3}}, {"b_3D", {d.dtok}},     {"mlp.W1", {d.hidden, 2 * d.dtok}},
        {"mlp.b1", {d.hidden}},   {"mlp.W2", {d.dtok, d.hidden}}, {"mlp.b2", {d.dtok}},
        {"ln_scale", {d.dtok}},   {"ln_shift", {d.dtok}}, {"ln_eps", nlohmann::json::array()},
        {"gate", nlohmann::json::array()}};
    for (auto& b : blocks) b["shape"] = shapes.at(b["name"].get<std::string>());

    const std::string hash = content_hash(bytes);
    const nlohmann::json manifest = {{"format", "any3d-fusion-checkpoint/1"},
                                     {"dtok", d.dtok},
                                     {"d3", d.d3},
                                     {"hidden", d.hidden},
                                     {"dtype", "float32-le"},
                                     {"bytes", bytes.size()},
                                     {"fnv1a64", hash},
                                     {"blocks", blocks}};
    io::write_file_atomic(path, bytes);
    io::write_text_atomic(path + ".json", manifest.dump(2) + "\n");
}

FusionParams read_checkpoint(const std::string& path) {
    const auto bytes = io::read_file(path);
    // The manifest is optional; when present its hash must match.
    if (std::filesystem::exists(path + ".json")) {
        const auto text = io::read_file(path + ".json");
        std::string expected;
        try {
            expected = nlohmann::json::parse(text.begin(), text.end()).at("fnv1a64").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ".json: " + e.what());
        }
        if (expected != content_hash(bytes)) throw FormatError(path + ": content hash differs from its manifest");
    }
    io::LeReader in(bytes, path);
    FusionDims dims;
    dims.dtok = in.get<std::uint32_t>();
    dims.d3 = in.get<std::uint32_t>();
    dims.hidden = in.get<std::uint32_t>();
    if (dims.dtok == 0 || dims.d3 == 0 || dims.hidden == 0) throw FormatError(path + ": zero dimension in header");
    auto p = FusionParams::zeros(dims);
    std::size_t expected = 0;
    p.for_each_block([&](std::string_view, std::span<double> b) { expected += b.size(); });
    if (in.remaining() != expected * sizeof(float))
        throw FormatError(path + ": payload size does not match the header dimensions");
    p.for_each_block([&](std::string_view, std::span<double> b) {
        for (double& v : b) v = in.get<float>();
    });
    try {
        p.validate();
    } catch (const PreconditionError& e) {
        throw FormatError(path + ": " + e.what());
    }
    return p;
}

}  // namespace any3d::fusion
