// any3d command-line driver. Machine-readable results go to stdout as JSON,
// progress and diagnostics to stderr.
//
// Exit codes: 0 success, 1 validation failure, 2 I/O or format failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "any3d/binio.hpp"
#include "any3d/config.hpp"
#include "any3d/error.hpp"
#include "any3d/formats.hpp"
#include "any3d/fusion.hpp"
#include "any3d/objectives.hpp"
#include "any3d/oracle.hpp"
#include "any3d/pipeline.hpp"
#include "any3d/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace any3d::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool print_config = false;
};

PipelineConfig effective_config(const Globals& g) {
    PipelineConfig cfg = g.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(io::resolve_data_path(g.config_path));
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    return cfg;
}

std::string require_out(const Globals& g) {
    if (g.out_dir.empty()) throw PreconditionError("--out DIR is required");
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (ec || !fs::is_directory(g.out_dir)) throw IoError("cannot create output directory " + g.out_dir);
    return g.out_dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void emit(const ordered_json& j) { std::cout << j.dump() << "\n"; }

std::string stem_of(const std::string& path) {
    std::string s = fs::path(path).filename().string();
    for (const char* ext : {".depth", ".f32", ".bin", ".ply"}) {
        const std::string e(ext);
        if (s.size() > e.size() && s.compare(s.size() - e.size(), e.size(), e) == 0) {
            s.resize(s.size() - e.size());
            break;
        }
    }
    return s;
}

// Compressed clouds travel as <stem>.rep.ply plus <stem>.rep.idx.
std::string index_path_for(const std::string& rep_ply) {
    const std::string ext = ".ply";
    if (rep_ply.size() > ext.size() && rep_ply.compare(rep_ply.size() - ext.size(), ext.size(), ext) == 0)
        return rep_ply.substr(0, rep_ply.size() - ext.size()) + ".idx";
    return rep_ply + ".idx";
}

RgbImage gray_image(int w, int h) {
    RgbImage img(w, h);
    for (auto& c : img.values) c = Eigen::Vector3f::Constant(0.5f);
    return img;
}

// ---------------------------------------------------------------------------

int cmd_synth(const Globals& g) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    const int trajectories = cfg.synth.trajectories;
    const int frames = cfg.synth.frames_per_trajectory;

    std::vector<datapipe::FrameInput> inputs;
    for (int t = 0; t < trajectories; ++t) {
        char traj[32];
        std::snprintf(traj, sizeof traj, "traj_%04d", t);
        const std::string tdir = join(out, traj);
        fs::create_directories(tdir);
        for (int f = 0; f < frames; ++f) {
            const auto k = static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(frames) + f;
            // Seed 0, first frame: the committed default scene.
            datapipe::SceneSpec spec = (cfg.seed == 0 && k == 0)
                                           ? datapipe::default_scene()
                                           : datapipe::jittered_scene(hash_combine(cfg.seed, k));
            spec.camera = cfg.camera;
            const auto img = datapipe::synth_scene(spec);

            char name[32];
            std::snprintf(name, sizeof name, "frame_%04d", f);
            const std::string rgb_path = join(tdir, std::string(name) + ".ppm");
            const std::string depth_path = join(tdir, std::string(name) + ".depth");
            datapipe::write_ppm(rgb_path, img.rgb);
            datapipe::write_depth(depth_path, img.depth, cfg.camera);
            inputs.push_back({traj, f, rgb_path, cfg.camera, {{std::string(datapipe::kSimulatorSource), depth_path}}});
            std::cerr << "synth: wrote " << depth_path << "\n";
        }
    }

    const auto manifest = datapipe::build_manifest(inputs, datapipe::SourceMix::single(std::string(datapipe::kSimulatorSource)),
                                                   cfg.seed);
    const std::string manifest_path = join(out, "manifest.jsonl");
    datapipe::write_manifest(manifest_path, manifest);
    emit({{"frames", inputs.size()}, {"manifest", manifest_path}, {"ok", manifest.ok()}});
    return manifest.ok() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

struct LiftArgs {
    std::vector<std::string> depth_paths;
    std::string rgb_path;
};

int cmd_lift_compress(const Globals& g, const LiftArgs& a) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    if (!a.rgb_path.empty() && a.depth_paths.size() != 1)
        throw PreconditionError("--rgb applies to a single depth frame");

    for (const auto& raw : a.depth_paths) {
        const std::string path = io::resolve_data_path(raw);
        const auto frame = datapipe::read_depth(path);
        RgbImage rgb;
        if (!a.rgb_path.empty()) {
            rgb = datapipe::read_ppm(io::resolve_data_path(a.rgb_path));
        } else {
            // Sibling <stem>.ppm when present, else flat gray.
            const fs::path sibling = fs::path(path).replace_extension(".ppm");
            rgb = fs::exists(sibling) ? datapipe::read_ppm(sibling.string())
                                      : gray_image(frame.depth.width, frame.depth.height);
        }
        if (rgb.width != frame.depth.width || rgb.height != frame.depth.height)
            throw PreconditionError(path + ": color image size differs from the depth image");

        const auto result = lift_compress(cfg, rgb, frame.depth, frame.intrinsics);
        const std::string stem = stem_of(path);
        const std::string dense_path = join(out, stem + ".dense.ply");
        const std::string rep_path = join(out, stem + ".rep.ply");
        const std::string idx_path = index_path_for(rep_path);
        io::write_ply(dense_path, result.dense);
        io::write_compressed(rep_path, idx_path, result.compressed);

        const auto& t = result.timings;
        emit({{"file", path},
              {"N", result.dense.size()},
              {"M", result.compressed.size()},
              {"degenerate_normals", result.degenerate_normals},
              {"dense_ply", dense_path},
              {"compressed_ply", rep_path},
              {"inverse_index", idx_path},
              {"timings_ms",
               {{"lift", t.lift_ms}, {"crop", t.crop_ms}, {"normals", t.normals_ms}, {"compress", t.compress_ms}}}});
        std::cerr << "lift-compress: " << path << " N=" << result.dense.size() << " M=" << result.compressed.size()
                  << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AlignArgs {
    std::string compressed;
    std::string index;
    std::string rgb;
    std::string depth;  // intrinsics source
    std::string features_2d;
    std::string features_3d;
    std::string checkpoint;
};

CameraIntrinsics camera_for(const PipelineConfig& cfg, const std::string& depth) {
    return depth.empty() ? cfg.camera : datapipe::read_depth_sidecar(io::resolve_data_path(depth));
}

CompressedCloud load_compressed(const std::string& ply, const std::string& index) {
    const std::string p = io::resolve_data_path(ply);
    return io::read_compressed(p, index.empty() ? index_path_for(p) : io::resolve_data_path(index));
}

int cmd_align_fuse(const Globals& g, const AlignArgs& a) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    const auto comp = load_compressed(a.compressed, a.index);
    const CameraIntrinsics camera = camera_for(cfg, a.depth);
    const RgbImage rgb = a.rgb.empty() ? gray_image(camera.width, camera.height)
                                       : datapipe::read_ppm(io::resolve_data_path(a.rgb));

    AlignFuseInputs in;
    in.compressed = &comp;
    in.rgb = &rgb;
    in.camera = camera;

    std::optional<fusion::TokenSequence> h2d;
    if (!a.features_2d.empty()) {
        const auto dump = io::read_feature_dump(io::resolve_data_path(a.features_2d));
        if (dump.count != cfg.patch_grid.size() || dump.dim != cfg.fusion_dims.dtok)
            throw PreconditionError(a.features_2d + ": expected " + std::to_string(cfg.patch_grid.size()) + " x " +
                                    std::to_string(cfg.fusion_dims.dtok) + " 2D tokens, got " +
                                    std::to_string(dump.count) + " x " + std::to_string(dump.dim));
        h2d = fusion::TokenSequence{cfg.patch_grid.rows, cfg.patch_grid.cols, dump.dim,
                                    std::vector<double>(dump.values.begin(), dump.values.end())};
        in.imported_2d = &*h2d;
    }
    std::optional<std::vector<float>> g3d;
    if (!a.features_3d.empty()) {
        auto dump = io::read_feature_dump(io::resolve_data_path(a.features_3d));
        if (dump.count != comp.size() || dump.dim != cfg.fusion_dims.d3)
            throw PreconditionError(a.features_3d + ": expected " + std::to_string(comp.size()) + " x " +
                                    std::to_string(cfg.fusion_dims.d3) + " 3D features, got " +
                                    std::to_string(dump.count) + " x " + std::to_string(dump.dim));
        g3d = std::move(dump.values);
        in.imported_3d = &*g3d;
    }
    std::optional<fusion::FusionParams> params;
    if (!a.checkpoint.empty()) {
        const std::string path = io::resolve_data_path(a.checkpoint);
        params = fusion::read_checkpoint(path);
        if (!(params->dims == cfg.fusion_dims))
            throw PreconditionError(a.checkpoint + ": checkpoint dims differ from the config fusion dims");
        in.params = &*params;
    }

    const auto r = align_fuse(cfg, in);
    const std::size_t patches = r.patch_features.size();
    const auto& mask = r.patch_features.empty_mask;
    io::write_feature_dump(join(out, "point_features.bin"),
                           {static_cast<std::uint32_t>(comp.size()), static_cast<std::uint32_t>(cfg.fusion_dims.d3),
                            r.point_features, std::vector<std::uint8_t>(comp.size(), 0)});
    io::write_feature_dump(join(out, "patch_features.bin"), io::to_dump(r.patch_features));
    io::write_feature_dump(join(out, "h2d.bin"), io::to_dump(r.h2d.values, r.h2d.dim, mask));
    io::write_feature_dump(join(out, "fused.bin"), io::to_dump(r.fused.values, r.fused.dim, mask));

    emit({{"M", comp.size()},
          {"patches", patches},
          {"empty_patches", r.patch_features.empty_count()},
          {"empty_fraction", r.empty_fraction},
          {"dtok", cfg.fusion_dims.dtok},
          {"d3", cfg.fusion_dims.d3},
          {"out", out}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const Globals& g, bool corrupt) {
    const PipelineConfig cfg = effective_config(g);
    GradcheckOptions opt;
    opt.dims = cfg.fusion_dims;
    opt.patches = cfg.gradcheck.patches;
    opt.draws = cfg.gradcheck.draws;
    opt.step = cfg.gradcheck.step;
    opt.tolerance = cfg.gradcheck.tolerance;
    opt.seed = cfg.seed;
    opt.corrupt_analytic = corrupt;
    const auto report = run_gradcheck(opt);

    ordered_json blocks = ordered_json::array();
    auto add = [&](const std::vector<GradcheckBlock>& group, const char* kind) {
        for (const auto& b : group)
            blocks.push_back({{"name", b.name}, {"kind", kind}, {"max_rel_err", b.max_rel_err}, {"checked", b.checked}});
    };
    add(report.params, "param");
    add(report.inputs, "input");
    add(report.losses, "loss");
    emit({{"pass", report.pass()},
          {"max_rel_err", report.max_rel_err()},
          {"tolerance", report.tolerance},
          {"draws", report.draws},
          {"blocks", blocks}});
    for (const auto& group : {&report.params, &report.inputs, &report.losses})
        for (const auto& b : *group)
            if (b.max_rel_err > report.tolerance) std::cerr << "gradcheck: " << b.name << " exceeds tolerance\n";
    return report.pass() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

CameraIntrinsics intrinsics_from(const json& j) {
    return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>(),
            j.at("width").get<int>(),  j.at("height").get<int>()};
}

std::vector<datapipe::FrameInput> read_trajectory_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory list " + path);
    std::vector<datapipe::FrameInput> frames;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            datapipe::FrameInput f;
            f.trajectory_id = j.at("trajectory_id").get<std::string>();
            f.frame_id = j.value("frame_id", std::int64_t{0});
            f.rgb_path = j.value("rgb_path", std::string());
            if (j.contains("intrinsics")) f.intrinsics = intrinsics_from(j.at("intrinsics"));
            if (j.contains("depth_paths"))
                for (const auto& [src, p] : j.at("depth_paths").items()) f.depth_paths[src] = p.get<std::string>();
            frames.push_back(std::move(f));
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return frames;
}

int cmd_mix(const Globals& g, const std::string& list, bool skip_validation) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    const auto frames = read_trajectory_list(io::resolve_data_path(list));
    datapipe::ManifestOptions opt;
    opt.validate_files = !skip_validation;
    const auto manifest = datapipe::build_manifest(frames, cfg.mix, cfg.seed, opt);
    const std::string path = join(out, "manifest.jsonl");
    datapipe::write_manifest(path, manifest);

    ordered_json summary = ordered_json::object();
    for (const auto& [src, count] : manifest.summary) summary[src] = count;
    emit({{"frames", manifest.records.size()}, {"summary", summary}, {"ok", manifest.ok()}, {"manifest", path}});
    for (const auto& p : manifest.problems) std::cerr << "mix: " << p << "\n";
    return manifest.ok() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw PreconditionError(std::string(what) + ": expected a matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw PreconditionError(std::string(what) + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

// Optional logits default to uniform over `vocab` tokens.
Eigen::MatrixXd logits_from(const json& rec, const char* key, std::size_t n, Eigen::Index vocab) {
    if (rec.contains(key)) return matrix_from(rec.at(key), key);
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), vocab);
}

ordered_json eval_record(const json& rec) {
    const objectives::ActionChunk a0{matrix_from(rec.at("A0"), "A0")};
    a0.validate();
    const auto noise = matrix_from(rec.at("noise"), "noise");
    const auto sample = objectives::make_flow_sample(a0, rec.at("t").get<double>(), noise);
    const Eigen::MatrixXd predicted =
        rec.contains("predicted") ? matrix_from(rec.at("predicted"), "predicted")
                                  : Eigen::MatrixXd::Zero(a0.values.rows(), a0.values.cols());

    objectives::TokenTargets targets;
    targets.bbox = rec.value("bbox_targets", std::vector<std::uint32_t>{});
    targets.gpose = rec.value("gpose_targets", std::vector<std::uint32_t>{});
    targets.is_synthetic = rec.at("is_synthetic").get<bool>();
    const auto vocab = rec.value("vocab", Eigen::Index{256});
    const auto lb = logits_from(rec, "logits_bbox", targets.bbox.size(), vocab);
    const auto lg = logits_from(rec, "logits_gpose", targets.gpose.size(), vocab);

    const double l_s1 = objectives::flow_matching_loss(sample, predicted, targets.is_synthetic);
    const double l_s2 = objectives::sequence_loss(lb, lg, targets);
    return {{"L_S1", l_s1}, {"L_S2", l_s2}, {"L_total", objectives::total_loss(l_s2, l_s1)}};
}

int cmd_loss_eval(const Globals& g, const std::string& input) {
    (void)effective_config(g);
    std::ifstream in(io::resolve_data_path(input));
    if (!in) throw IoError("cannot open " + input);
    std::string out_text, line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(input + ":" + std::to_string(n) + ": " + e.what());
        }
        try {
            out_text += eval_record(rec).dump() + "\n";
        } catch (const json::exception& e) {
            throw PreconditionError(input + ":" + std::to_string(n) + ": " + e.what());
        } catch (const PreconditionError& e) {
            throw PreconditionError(input + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    std::cout << out_text;
    if (!g.out_dir.empty()) io::write_text_atomic(join(require_out(g), "losses.jsonl"), out_text);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
    std::string compressed;
    std::string index;
    std::string depth;
    std::string point_features;
    std::string dense;
};

// Brute-force scatter-mean straight from the compressed cloud and the point features.
int cmd_oracle_scatter_mean(const Globals& g, const OracleArgs& a) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    const auto comp = load_compressed(a.compressed, a.index);
    const auto& grid = cfg.patch_grid;
    const CameraIntrinsics camera = camera_for(cfg, a.depth).resized(grid.image_width, grid.image_height);
    const auto feats = io::read_feature_dump(io::resolve_data_path(a.point_features));
    if (feats.count != comp.size())
        throw PreconditionError(a.point_features + ": expected one feature row per representative");

    std::vector<std::uint32_t> assign;
    for (const auto& p : comp.representatives.coords)
        assign.push_back(oracle::assign_patch(camera, p, grid.patch_px, grid.rows, grid.cols));
    const auto empty = initial_empty_token(feats.dim, cfg.encoder_seed);
    io::FeatureDump dump;
    dump.count = static_cast<std::uint32_t>(grid.size());
    dump.dim = feats.dim;
    dump.values = oracle::scatter_mean(assign, feats.values, feats.dim, grid.size(), empty);
    dump.mask.assign(grid.size(), 1);
    for (auto j : assign) dump.mask[j] = 0;
    const std::string path = join(out, "oracle_patch_features.bin");
    io::write_feature_dump(path, dump);
    std::size_t empty_count = 0;
    for (auto m : dump.mask) empty_count += m;
    emit({{"patches", grid.size()}, {"empty_patches", empty_count}, {"out", path}});
    return kExitOk;
}

// Brute-force voxel group-by of a dense PLY, written in the compressed format.
int cmd_oracle_voxel(const Globals& g, const OracleArgs& a) {
    const PipelineConfig cfg = effective_config(g);
    const std::string out = require_out(g);
    const std::string path = io::resolve_data_path(a.dense);
    const PointCloud dense = io::read_ply(path);
    if (cfg.voxel.rule != RepresentativeRule::LowestIndex)
        throw PreconditionError("oracle voxel: only the lowest_index representative rule has an oracle");
    const auto groups = oracle::voxel_group_by(dense.coords, cfg.voxel.g);
    CompressedCloud comp;
    comp.representatives = dense.select(groups.representatives);
    comp.voxel_coords = groups.voxels;
    comp.inverse_index = groups.inverse_index;
    const std::string stem = stem_of(path);
    const std::string rep = join(out, stem + ".oracle.ply");
    io::write_compressed(rep, index_path_for(rep), comp);
    emit({{"N", dense.size()}, {"M", comp.size()}, {"compressed_ply", rep}, {"inverse_index", index_path_for(rep)}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"any3d: lift, compress, align and fuse depth-derived 3D features"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_flag("--print-config", g.print_config, "Print the effective config and exit");

    auto* synth = app.add_subcommand("synth", "Render synthetic tabletop frames and a manifest");

    LiftArgs lift;
    auto* lc = app.add_subcommand("lift-compress", "Lift, crop, estimate normals and voxel-compress depth frames");
    lc->add_option("depth", lift.depth_paths, "Depth files")->required();
    lc->add_option("--rgb", lift.rgb_path, "Color image (PPM) for a single frame");

    AlignArgs align;
    auto* af = app.add_subcommand("align-fuse", "Align compressed-cloud features to patches and fuse with 2D tokens");
    af->add_option("compressed", align.compressed, "Compressed cloud PLY")->required();
    af->add_option("--index", align.index, "Inverse-index sidecar (default: <ply stem>.idx)");
    af->add_option("--rgb", align.rgb, "Color image (PPM) for the 2D stub encoder");
    af->add_option("--depth", align.depth, "Depth file whose sidecar supplies the intrinsics");
    af->add_option("--features-2d", align.features_2d, "Imported 2D token dump");
    af->add_option("--features-3d", align.features_3d, "Imported per-point 3D feature dump");
    af->add_option("--checkpoint", align.checkpoint, "Fusion parameter checkpoint");

    bool corrupt = false;
    auto* gc = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
    gc->add_flag("--corrupt-gradient", corrupt)->group("");

    std::string traj_list;
    bool skip_validation = false;
    auto* mix = app.add_subcommand("mix", "Assign depth sources per trajectory and write a manifest");
    mix->add_option("trajectories", traj_list, "Trajectory list (JSONL)")->required();
    mix->add_flag("--skip-validation", skip_validation, "Do not check depth files");

    std::string loss_input;
    auto* le = app.add_subcommand("loss-eval", "Evaluate training losses on JSONL records");
    le->add_option("input", loss_input, "Input JSONL")->required();

    OracleArgs oa;
    auto* orc = app.add_subcommand("oracle", "Brute-force reference implementations");
    orc->require_subcommand(1);
    auto* osm = orc->add_subcommand("scatter-mean", "Group-by patch means of point features");
    osm->add_option("compressed", oa.compressed, "Compressed cloud PLY")->required();
    osm->add_option("--index", oa.index, "Inverse-index sidecar");
    osm->add_option("--depth", oa.depth, "Depth file whose sidecar supplies the intrinsics");
    osm->add_option("--point-features", oa.point_features, "Per-point feature dump")->required();
    auto* ovx = orc->add_subcommand("voxel", "Group-by voxel compression of a dense PLY");
    ovx->add_option("dense", oa.dense, "Dense PLY")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    if (g.print_config) {
        std::cout << effective_config(g).to_json().dump(2) << "\n";
        return kExitOk;
    }
    if (*synth) return cmd_synth(g);
    if (*lc) return cmd_lift_compress(g, lift);
    if (*af) return cmd_align_fuse(g, align);
    if (*gc) return cmd_gradcheck(g, corrupt);
    if (*mix) return cmd_mix(g, traj_list, skip_validation);
    if (*le) return cmd_loss_eval(g, loss_input);
    if (*osm) return cmd_oracle_scatter_mean(g, oa);
    if (*ovx) return cmd_oracle_voxel(g, oa);
    std::cerr << app.help();
    return kExitValidation;
}

}  // namespace
}  // namespace any3d::cli

int main(int argc, char** argv) {
    using namespace any3d;
    try {
        return cli::run(argc, argv);
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitValidation;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return cli::kExitIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return cli::kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return cli::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitIo;
    }
}
