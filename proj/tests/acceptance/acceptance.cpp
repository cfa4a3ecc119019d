// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "any3d/alignment.hpp"
#include "any3d/binio.hpp"
#include "any3d/compression.hpp"
#include "any3d/datapipe.hpp"
#include "any3d/fusion.hpp"
#include "any3d/geometry.hpp"
#include "any3d/objectives.hpp"
#include "any3d/oracle.hpp"
#include "any3d/pipeline.hpp"
#include "any3d/rng.hpp"

using namespace any3d;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const CameraIntrinsics kCam{200.0, 200.0, 128.0, 128.0, 256, 256};

// 1. Lift/project roundtrip over a million pixels.
Outcome roundtrip() {
    constexpr std::size_t n = 1'000'000;
    CounterRng rng(1);
    std::vector<double> u(n), v(n), d(n), x(n), y(n), z(n), u2(n), v2(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = static_cast<double>(rng.uniform_int(0, kCam.width - 1));
        v[i] = static_cast<double>(rng.uniform_int(0, kCam.height - 1));
        d[i] = rng.uniform(0.05, 5.0);
    }
    const auto t0 = Clock::now();
    backproject_pixels(kCam, u, v, d, x, y, z);
    project_points(kCam, x, y, z, u2, v2);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max({worst, std::abs(u2[i] - u[i]), std::abs(v2[i] - v[i])});
    return {worst <= 1e-9 && secs < 1.0,
            fmt("max pixel error %.3g over 1e6 pixels, %.3f s [%s]", worst, secs,
                std::string(simd::level_name(simd::active_kernels().level)).c_str())};
}

// 2. Compression against the brute-force group-by.
Outcome compression() {
    const auto t0 = Clock::now();
    int mismatched = 0;
    std::size_t largest = 0;
    for (int c = 0; c < 100; ++c) {
        CounterRng rng(hash_combine(2, static_cast<std::uint64_t>(c)));
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 100'000));
        largest = std::max(largest, n);
        const double sx = rng.uniform(0.05, 1.0), sy = rng.uniform(0.05, 1.0), sz = rng.uniform(0.05, 0.5);
        PointCloud cloud;
        cloud.coords.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            cloud.coords.emplace_back(rng.uniform(-sx, sx), rng.uniform(-sy, sy), rng.uniform(0.1, 0.1 + sz));
            cloud.colors.emplace_back(0.0f, 0.0f, 0.0f);
        }
        const auto comp = compress(cloud, VoxelSpec{});
        const auto ref = oracle::voxel_group_by(cloud.coords, 0.01);
        bool same = comp.voxel_coords == ref.voxels && comp.inverse_index == ref.inverse_index &&
                    comp.size() == ref.representatives.size();
        for (std::size_t r = 0; same && r < comp.size(); ++r)
            same = comp.representatives.coords[r] == cloud.coords[ref.representatives[r]];
        mismatched += !same;
    }
    const double secs = seconds_since(t0);
    return {mismatched == 0 && secs < 10.0,
            fmt("%d/100 clouds differ (largest %zu points), %.2f s including the oracle", mismatched, largest, secs)};
}

// 3. Count bands of the committed default scene.
Outcome count_bands() {
    const auto spec = datapipe::default_scene();
    const PipelineConfig cfg;
    double worst = 0.0;
    std::vector<std::size_t> ns, ms;
    std::vector<std::uint8_t> first_ply;
    bool deterministic = true;
    for (int rep = 0; rep < 2; ++rep) {
        const auto t0 = Clock::now();
        const auto img = datapipe::synth_scene(spec);
        const auto r = lift_compress(cfg, img.rgb, img.depth, spec.camera);
        worst = std::max(worst, seconds_since(t0));
        ns.push_back(r.dense.size());
        ms.push_back(r.compressed.size());
        std::vector<std::uint8_t> dump;
        for (std::uint32_t k : r.compressed.inverse_index) io::put_le(dump, k);
        if (rep == 0) first_ply = dump;
        else deterministic = dump == first_ply;
    }
    deterministic = deterministic && ns[0] == ns[1] && ms[0] == ms[1];
    const bool in_band = ns[0] >= 30'000 && ns[0] <= 60'000 && ms[0] >= 3'000 && ms[0] <= 8'000;
    return {in_band && deterministic && worst < 1.0,
            fmt("N = %zu, M = %zu, deterministic %s, %.3f s per frame", ns[0], ms[0], deterministic ? "yes" : "no",
                worst)};
}

// 4. Scatter-mean against the brute-force group-by average.
Outcome scatter() {
    const PatchGrid grid;
    double worst = 0.0;
    std::size_t bad_empty = 0, empties = 0;
    const auto t0 = Clock::now();
    for (int inst = 0; inst < 1000; ++inst) {
        CounterRng rng(hash_combine(4, static_cast<std::uint64_t>(inst)));
        // Mostly small instances, with a sprinkling of large ones up to 1e5 points.
        const std::int64_t cap = inst % 50 == 0 ? 100'000 : 5'000;
        const auto n = static_cast<std::size_t>(rng.uniform_int(0, cap));
        const auto dim = static_cast<std::size_t>(rng.uniform_int(1, 32));
        // Restrict to a random window of patches so some are empty.
        const auto lo = rng.uniform_int(0, 255);
        const auto hi = rng.uniform_int(lo, 255);
        std::vector<std::uint32_t> a(n);
        for (auto& j : a) j = static_cast<std::uint32_t>(rng.uniform_int(lo, hi));
        std::vector<float> f(n * dim);
        for (auto& x : f) x = static_cast<float>(rng.uniform(-10.0, 10.0));
        std::vector<float> empty(dim);
        for (auto& x : empty) x = static_cast<float>(rng.normal());
        const auto out = scatter_mean(a, f, dim, grid, empty);
        const auto ref = oracle::scatter_mean(a, f, dim, grid.size(), empty);
        for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(double(out.features[k]) - ref[k]));
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (!out.empty_mask[j]) continue;
            ++empties;
            bad_empty += std::memcmp(out.row(j).data(), empty.data(), dim * sizeof(float)) != 0;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && bad_empty == 0,
            fmt("max abs deviation %.3g over 1000 instances, %zu/%zu empty patches differ from the token, %.2f s",
                worst, bad_empty, empties, secs)};
}

// 5. Gate initialization and the closed-gate identity.
Outcome gate() {
    const double s = fusion::sigmoid(fusion::kGateInit);
    const fusion::FusionDims dims{32, 24, 64};
    auto p = fusion::init_params(dims, 5);
    p.gate = -50.0;
    CounterRng rng(5);
    fusion::TokenSequence h2d{16, 16, dims.dtok, std::vector<double>(256 * dims.dtok)};
    fusion::TokenSequence h3d = h2d;
    for (double& v : h2d.values) v = rng.normal();
    for (double& v : h3d.values) v = rng.normal() * 10.0;
    const auto fused = fusion::fuse(h2d, h3d, p);
    double worst = 0.0;
    for (std::size_t k = 0; k < fused.values.size(); ++k) worst = std::max(worst, std::abs(fused.values[k] - h2d.values[k]));
    return {std::abs(s - 0.1) <= 1e-4 && worst <= 1e-10,
            fmt("sigmoid(-2.1972) = %.6f, closed-gate max |fused - h2d| = %.3g", s, worst)};
}

// 6. Analytic gradients against finite differences.
Outcome gradients() {
    GradcheckOptions opt;  // dtok 8, d3 6, hidden 16, 4 patches, 100 draws
    const auto t0 = Clock::now();
    const auto report = run_gradcheck(opt);
    const double secs = seconds_since(t0);
    bool covered = report.params.size() == 10 && !report.losses.empty();
    for (const auto& b : report.params) covered = covered && b.checked > 0;
    return {report.pass() && covered && report.draws >= 100 && secs < 60.0,
            fmt("max relative error %.3g over %d draws (%zu param blocks, flow loss included), %.2f s",
                report.max_rel_err(), report.draws, report.params.size(), secs)};
}

// 7. Loss closed forms.
Outcome losses() {
    using namespace objectives;
    double worst = 0.0;
    for (int v : {2, 10, 256, 1000}) {
        TokenTargets t;
        t.bbox = {0, 1, 1, 0};
        t.gpose = {1, 1, 0};
        t.is_synthetic = true;
        const double l = sequence_loss(Eigen::MatrixXd::Zero(4, v), Eigen::MatrixXd::Zero(3, v), t);
        worst = std::max(worst, std::abs(l - 7.0 * std::log(static_cast<double>(v))));
    }
    CounterRng rng(7);
    ActionChunk a0{Eigen::MatrixXd(kDefaultHorizon, kDefaultActionDim)};
    for (Eigen::Index i = 0; i < a0.values.size(); ++i) a0.values.data()[i] = rng.normal();
    const auto s = draw_flow_sample(a0, rng);
    const double perfect = flow_matching_loss(s, s.u_t, true);

    // A real-image sample: grasp-pose logits are adversarial yet contribute nothing.
    TokenTargets grit;
    grit.bbox = {1};
    grit.gpose = {0, 0};
    grit.is_synthetic = false;
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 16);
    bad.col(5).setConstant(50.0);
    const double with_pose = sequence_loss(Eigen::MatrixXd::Zero(1, 16), bad, grit);
    const Eigen::MatrixXd wrong = s.u_t.array() + 1.0;
    const double grit_flow = flow_matching_loss(s, wrong, false);
    const bool grit_ok = std::abs(with_pose - std::log(16.0)) <= 1e-12 && grit_flow == 0.0 &&
                         flow_matching_loss_grad(s, wrong, false).isZero(0.0);
    return {worst <= 1e-9 && perfect == 0.0 && grit_ok,
            fmt("|L_S2 - N ln V| <= %.3g, perfect L_S1 = %g, real-sample pose term and L_S1 zeroed: %s", worst,
                perfect, grit_ok ? "yes" : "no")};
}

// 8. Source mixing ratios and per-trajectory consistency.
Outcome mixing() {
    const auto mix = datapipe::SourceMix::hybrid_default();
    std::vector<std::string> ids;
    for (int i = 0; i < 10'000; ++i) ids.push_back("trajectory_" + std::to_string(i));
    const auto assign = datapipe::sample_sources(mix, ids, 8);
    std::map<std::string, double> count;
    for (const auto& [id, src] : assign) count[src] += 1.0;
    double max_pp = 0.0, chi2 = 0.0;
    for (const auto& [src, p] : mix.entries) {
        max_pp = std::max(max_pp, 100.0 * std::abs(count[src] / 10'000.0 - p));
        const double expected = p * 10'000.0;
        chi2 += (count[src] - expected) * (count[src] - expected) / expected;
    }
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(mix.entries.size() - 1));
    const double pval = boost::math::cdf(boost::math::complement(dist, chi2));

    // Manifests with several frames per trajectory, across seeds.
    std::size_t inconsistent = 0;
    datapipe::ManifestOptions opt;
    opt.validate_files = false;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<datapipe::FrameInput> frames;
        for (int t = 0; t < 2000; ++t)
            for (int f = 0; f < 3; ++f) {
                datapipe::FrameInput in{"traj_" + std::to_string(t), f, "rgb.ppm", kCam, {}};
                for (const auto& [src, p] : mix.entries) in.depth_paths[src] = src + ".depth";
                frames.push_back(std::move(in));
            }
        inconsistent += datapipe::inconsistent_trajectories(datapipe::build_manifest(frames, mix, seed, opt)).size();
    }
    return {max_pp <= 1.5 && pval > 0.001 && inconsistent == 0,
            fmt("max deviation %.2f pp, chi-square %.2f (p = %.3f), %zu inconsistent trajectories", max_pp, chi2, pval,
                inconsistent)};
}

// 9. Depth file format.
Outcome depth_format() {
    const auto dir = std::filesystem::temp_directory_path() / "any3d_acceptance_depth";
    std::filesystem::create_directories(dir);
    const std::string a = (dir / "a.depth").string(), b = (dir / "b.depth").string();
    auto img = datapipe::synth_scene(datapipe::default_scene()).depth;
    img.at(0, 0) = -0.0f;  // an invalid pixel spelled as negative zero
    datapipe::write_depth(a, img, kCam);
    const auto back = datapipe::read_depth(a);
    datapipe::write_depth(b, back.depth, back.intrinsics);
    const auto bytes_a = io::read_file(a), bytes_b = io::read_file(b);
    const bool identical = bytes_a == bytes_b && io::read_file(a + ".json") == io::read_file(b + ".json");
    bool zeros_ok = true;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        if (img.values[i] != 0.0f) continue;
        ++invalid;
        for (int k = 0; k < 4; ++k) zeros_ok = zeros_ok && bytes_a[i * 4 + static_cast<std::size_t>(k)] == 0;
    }
    std::filesystem::remove_all(dir);
    return {identical && bytes_a.size() == 262'144 && zeros_ok && invalid > 0,
            fmt("payload %zu bytes, rewrite identical %s, %zu invalid pixels all +0.0 %s", bytes_a.size(),
                identical ? "yes" : "no", invalid, zeros_ok ? "yes" : "no")};
}

// 10. The toy flow predictor converges on a fixed batch.
Outcome convergence() {
    using namespace objectives;
    CounterRng rng(10);
    constexpr std::size_t batch_size = 16, cond_dim = 8;
    std::vector<FlowSample> batch;
    std::vector<Eigen::VectorXd> cond;
    std::vector<bool> synthetic(batch_size, true);
    for (std::size_t b = 0; b < batch_size; ++b) {
        ActionChunk a0{Eigen::MatrixXd(kDefaultHorizon, kDefaultActionDim)};
        for (Eigen::Index i = 0; i < a0.values.size(); ++i) a0.values.data()[i] = rng.normal();
        batch.push_back(draw_flow_sample(a0, rng));
        Eigen::VectorXd c(cond_dim);
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.normal();
        cond.push_back(c);
    }
    const auto t0 = Clock::now();
    LinearFlowPredictor model(kDefaultHorizon, kDefaultActionDim, cond_dim);
    const double lr = model.stable_learning_rate(batch, cond);
    const double before = model.batch_loss(batch, cond, synthetic);
    for (int s = 0; s < 500; ++s) model.step(batch, cond, synthetic, lr);
    const double after = model.batch_loss(batch, cond, synthetic);
    const double secs = seconds_since(t0);
    const double ratio = before / std::max(after, 1e-300);
    return {ratio >= 100.0 && secs < 30.0,
            fmt("L_S1 %.4g -> %.4g (%.3gx) in 500 steps, %.2f s", before, after, ratio, secs)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"lift/project roundtrip", roundtrip},
        {"compression oracle equivalence", compression},
        {"synthetic scene count bands", count_bands},
        {"scatter-mean oracle equivalence", scatter},
        {"gate initialization and closed gate", gate},
        {"gradient checks", gradients},
        {"loss closed forms", losses},
        {"hybrid source mixing", mixing},
        {"depth file format", depth_format},
        {"toy flow predictor convergence", convergence},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
