#include <algorithm>
#include <cmath>

#include "any3d/objectives.hpp"
#include "any3d/pipeline.hpp"
#include "any3d/rng.hpp"

namespace any3d {
namespace {

using LD = long double;
using fusion::BasicFusionParams;
using fusion::BasicTokens;
using fusion::FusionParams;
using fusion::TokenSequence;

TokenSequence random_tokens(int rows, int cols, std::size_t dim, CounterRng rng) {
    TokenSequence t{rows, cols, dim, std::vector<double>(static_cast<std::size_t>(rows) * cols * dim)};
    for (double& v : t.values) v = rng.normal();
    return t;
}

FusionParams random_params(const fusion::FusionDims& dims, CounterRng rng) {
    FusionParams p = fusion::init_params(dims, rng.next_u64());
    for (double& v : p.b3d) v = 0.1 * rng.normal();
    for (double& v : p.b1) v = 0.1 * rng.normal();
    for (double& v : p.b2) v = 0.1 * rng.normal();
    for (double& v : p.ln_scale) v = 1.0 + 0.2 * rng.normal();
    for (double& v : p.ln_shift) v = 0.1 * rng.normal();
    p.gate = rng.uniform(-3.0, 3.0);
    return p;
}

GradcheckBlock& block(std::vector<GradcheckBlock>& blocks, std::string_view name) {
    for (auto& b : blocks)
        if (b.name == name) return b;
    blocks.push_back({std::string(name), 0.0, 0});
    return blocks.back();
}

void record(GradcheckBlock& b, double analytic, double numeric) {
    b.max_rel_err = std::max(b.max_rel_err, relative_error(analytic, numeric));
    ++b.checked;
}

// Central difference of f around x[i] (restored afterwards).
template <typename F>
LD central(F&& f, LD& x, double step) {
    const LD saved = x;
    const LD h = static_cast<LD>(step);
    x = saved + h;
    const LD plus = f();
    x = saved - h;
    const LD minus = f();
    x = saved;
    return (plus - minus) / (2 * h);
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
    return std::abs(analytic - numeric) / denom;
}

bool GradcheckReport::pass() const { return max_rel_err() <= tolerance; }

double GradcheckReport::max_rel_err() const {
    double worst = 0.0;
    for (const auto* group : {&params, &inputs, &losses})
        for (const auto& b : *group) worst = std::max(worst, b.max_rel_err);
    return worst;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
    GradcheckReport report;
    report.tolerance = opt.tolerance;
    report.draws = opt.draws;
    const int rows = 1, cols = opt.patches;
    const auto& dims = opt.dims;

    // Fix block order: parameters first, in field order.
    FusionParams::zeros(dims).for_each_block(
        [&](std::string_view name, std::span<const double>) { block(report.params, name); });
    for (const char* name : {"h2d", "h3d", "g3d", "empty_token"}) block(report.inputs, name);

    const CounterRng root(opt.seed);
    for (int d = 0; d < opt.draws; ++d) {
        const CounterRng rng = root.split(static_cast<std::uint64_t>(d));
        const FusionParams p = random_params(dims, rng.split(1));
        const TokenSequence h2d = random_tokens(rows, cols, dims.dtok, rng.split(2));
        TokenSequence g3d = random_tokens(rows, cols, dims.d3, rng.split(3));
        const TokenSequence up = random_tokens(rows, cols, dims.dtok, rng.split(4));

        // Every other patch is empty and carries the shared empty token.
        std::vector<std::uint8_t> mask(g3d.size(), 0);
        CounterRng erng = rng.split(5);
        std::vector<double> empty(dims.d3);
        for (double& v : empty) v = erng.normal();
        for (std::size_t j = 0; j < mask.size(); j += 2) {
            mask[j] = 1;
            std::copy(empty.begin(), empty.end(), g3d.token(j).begin());
        }

        auto g = fusion::fuse_backward(h2d, g3d, p, up);
        if (opt.corrupt_analytic)
            for (double& v : g.params.w3d) v *= 1.01;
        const auto g_empty = fusion::empty_token_gradient(g, mask);

        // Extended-precision copies for differencing.
        auto pl = p.cast<LD>();
        auto h2d_l = h2d.cast<LD>();
        auto g3d_l = g3d.cast<LD>();
        const auto up_l = up.cast<LD>();
        auto objective = [&]() { return fusion::fusion_objective(h2d_l, g3d_l, pl, up_l); };

        std::vector<std::span<LD>> num_blocks;
        pl.for_each_block([&](std::string_view, std::span<LD> b) { num_blocks.push_back(b); });
        std::vector<std::span<const double>> ana_blocks;
        g.params.for_each_block([&](std::string_view, std::span<const double> b) { ana_blocks.push_back(b); });
        for (std::size_t bi = 0; bi < num_blocks.size(); ++bi) {
            auto& out = report.params[bi];
            for (std::size_t k = 0; k < num_blocks[bi].size(); ++k)
                record(out, ana_blocks[bi][k], static_cast<double>(central(objective, num_blocks[bi][k], opt.step)));
        }

        for (std::size_t k = 0; k < h2d_l.values.size(); ++k)
            record(block(report.inputs, "h2d"), g.h2d.values[k],
                   static_cast<double>(central(objective, h2d_l.values[k], opt.step)));
        for (std::size_t k = 0; k < g3d_l.values.size(); ++k)
            record(block(report.inputs, "g3d"), g.g3d.values[k],
                   static_cast<double>(central(objective, g3d_l.values[k], opt.step)));

        // h3d as a free input.
        auto h3d_l = fusion::project_3d_tokens(g3d_l, pl);
        auto objective_h3d = [&]() {
            const auto fused = fusion::fuse(h2d_l, h3d_l, pl);
            LD s = 0;
            for (std::size_t i = 0; i < fused.values.size(); ++i) s += up_l.values[i] * fused.values[i];
            return s;
        };
        for (std::size_t k = 0; k < h3d_l.values.size(); ++k)
            record(block(report.inputs, "h3d"), g.h3d.values[k],
                   static_cast<double>(central(objective_h3d, h3d_l.values[k], opt.step)));

        // The empty token enters every empty patch at once.
        for (std::size_t k = 0; k < dims.d3; ++k) {
            const LD saved = g3d_l.values[k];
            const LD h = static_cast<LD>(opt.step);
            auto set_all = [&](LD v) {
                for (std::size_t j = 0; j < mask.size(); ++j)
                    if (mask[j]) g3d_l.values[j * dims.d3 + k] = v;
            };
            set_all(saved + h);
            const LD plus = objective();
            set_all(saved - h);
            const LD minus = objective();
            set_all(saved);
            record(block(report.inputs, "empty_token"), g_empty[k], static_cast<double>((plus - minus) / (2 * h)));
        }

        // Flow-matching loss gradient with respect to the predicted field.
        CounterRng frng = rng.split(6);
        objectives::ActionChunk a0{Eigen::MatrixXd(objectives::kDefaultHorizon, objectives::kDefaultActionDim)};
        for (Eigen::Index i = 0; i < a0.values.size(); ++i) a0.values.data()[i] = frng.normal();
        const auto sample = objectives::draw_flow_sample(a0, frng);
        Eigen::MatrixXd pred = sample.u_t;
        for (Eigen::Index i = 0; i < pred.size(); ++i) pred.data()[i] += frng.normal();
        const Eigen::MatrixXd ana = objectives::flow_matching_loss_grad(sample, pred, true);
        for (Eigen::Index i = 0; i < pred.size(); ++i) {
            const double saved = pred.data()[i];
            pred.data()[i] = saved + opt.step;
            const double plus = objectives::flow_matching_loss(sample, pred, true);
            pred.data()[i] = saved - opt.step;
            const double minus = objectives::flow_matching_loss(sample, pred, true);
            pred.data()[i] = saved;
            record(block(report.losses, "flow_matching.predicted_field"), ana.data()[i],
                   (plus - minus) / (2.0 * opt.step));
        }
    }
    return report;
}

}  // namespace any3d
