#include "any3d/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "any3d/error.hpp"

namespace any3d {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    require(j.is_object(), "config: '" + where + "' must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) != 0, "config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

const char* rule_name(RepresentativeRule r) {
    return r == RepresentativeRule::LowestIndex ? "lowest_index" : "seeded_random";
}

}  // namespace

void PipelineConfig::validate() const {
    camera.validate();
    crop.validate();
    voxel.validate();
    require(normal_neighbors >= 3, "config: normals.k must be at least 3");
    patch_grid.validate();
    require(fusion_dims.dtok > 0 && fusion_dims.d3 > 0 && fusion_dims.hidden > 0, "config: fusion dims must be positive");
    require(ln_eps > 0.0, "config: fusion.ln_eps must be positive");
    mix.validate();
    require(synth.trajectories >= 0 && synth.frames_per_trajectory >= 0, "config: synth counts must be >= 0");
    require(gradcheck.draws >= 1 && gradcheck.patches >= 1 && gradcheck.step > 0.0 && gradcheck.tolerance > 0.0,
            "config: gradcheck settings must be positive");
}

nlohmann::ordered_json PipelineConfig::to_json() const {
    nlohmann::ordered_json mix_json = nlohmann::ordered_json::array();
    for (const auto& [name, p] : mix.entries) mix_json.push_back({{"source", name}, {"p", p}});
    return {
        {"seed", seed},
        {"camera", {{"fx", camera.fx}, {"fy", camera.fy}, {"cx", camera.cx}, {"cy", camera.cy},
                    {"width", camera.width}, {"height", camera.height}}},
        {"crop", {{"y_min", crop.y_min}, {"y_max", crop.y_max}, {"radius_xz_max", crop.radius_xz_max},
                  {"z_min", crop.z_min}, {"z_max", crop.z_max}}},
        {"voxel", {{"g", voxel.g}, {"representative", rule_name(voxel.rule)}, {"seed", voxel.seed}}},
        {"normals", {{"k", normal_neighbors}}},
        {"patch_grid", {{"image_width", patch_grid.image_width}, {"image_height", patch_grid.image_height},
                        {"patch_px", patch_grid.patch_px}, {"rows", patch_grid.rows}, {"cols", patch_grid.cols}}},
        {"fusion", {{"dtok", fusion_dims.dtok}, {"d3", fusion_dims.d3}, {"hidden", fusion_dims.hidden},
                    {"gate", gate}, {"ln_eps", ln_eps}, {"seed", fusion_seed}}},
        {"encoders", {{"seed", encoder_seed}}},
        {"mix", mix_json},
        {"synth", {{"trajectories", synth.trajectories}, {"frames_per_trajectory", synth.frames_per_trajectory}}},
        {"gradcheck", {{"draws", gradcheck.draws}, {"patches", gradcheck.patches}, {"step", gradcheck.step},
                       {"tolerance", gradcheck.tolerance}}},
    };
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    try {
        reject_unknown(j, "", {"seed", "camera", "crop", "voxel", "normals", "patch_grid", "fusion", "encoders",
                               "mix", "synth", "gradcheck"});
        read(j, "seed", c.seed);
        if (j.contains("camera")) {
            const auto& s = j.at("camera");
            reject_unknown(s, "camera", {"fx", "fy", "cx", "cy", "width", "height"});
            read(s, "fx", c.camera.fx);
            read(s, "fy", c.camera.fy);
            read(s, "cx", c.camera.cx);
            read(s, "cy", c.camera.cy);
            read(s, "width", c.camera.width);
            read(s, "height", c.camera.height);
        }
        if (j.contains("crop")) {
            const auto& s = j.at("crop");
            reject_unknown(s, "crop", {"y_min", "y_max", "radius_xz_max", "z_min", "z_max"});
            read(s, "y_min", c.crop.y_min);
            read(s, "y_max", c.crop.y_max);
            read(s, "radius_xz_max", c.crop.radius_xz_max);
            read(s, "z_min", c.crop.z_min);
            read(s, "z_max", c.crop.z_max);
        }
        if (j.contains("voxel")) {
            const auto& s = j.at("voxel");
            reject_unknown(s, "voxel", {"g", "representative", "seed"});
            read(s, "g", c.voxel.g);
            read(s, "seed", c.voxel.seed);
            if (s.contains("representative")) {
                const auto rule = s.at("representative").get<std::string>();
                require(rule == "lowest_index" || rule == "seeded_random",
                        "config: voxel.representative must be 'lowest_index' or 'seeded_random'");
                c.voxel.rule = rule == "lowest_index" ? RepresentativeRule::LowestIndex : RepresentativeRule::SeededRandom;
            }
        }
        if (j.contains("normals")) {
            reject_unknown(j.at("normals"), "normals", {"k"});
            read(j.at("normals"), "k", c.normal_neighbors);
        }
        if (j.contains("patch_grid")) {
            const auto& s = j.at("patch_grid");
            reject_unknown(s, "patch_grid", {"image_width", "image_height", "patch_px", "rows", "cols"});
            read(s, "image_width", c.patch_grid.image_width);
            read(s, "image_height", c.patch_grid.image_height);
            read(s, "patch_px", c.patch_grid.patch_px);
            read(s, "rows", c.patch_grid.rows);
            read(s, "cols", c.patch_grid.cols);
        }
        if (j.contains("fusion")) {
            const auto& s = j.at("fusion");
            reject_unknown(s, "fusion", {"dtok", "d3", "hidden", "gate", "ln_eps", "seed"});
            read(s, "dtok", c.fusion_dims.dtok);
            read(s, "d3", c.fusion_dims.d3);
            read(s, "hidden", c.fusion_dims.hidden);
            read(s, "gate", c.gate);
            read(s, "ln_eps", c.ln_eps);
            read(s, "seed", c.fusion_seed);
        }
        if (j.contains("encoders")) {
            reject_unknown(j.at("encoders"), "encoders", {"seed"});
            read(j.at("encoders"), "seed", c.encoder_seed);
        }
        if (j.contains("mix")) {
            require(j.at("mix").is_array(), "config: 'mix' must be an array");
            c.mix.entries.clear();
            for (const auto& e : j.at("mix")) {
                reject_unknown(e, "mix[]", {"source", "p"});
                c.mix.entries.emplace_back(e.at("source").get<std::string>(), e.at("p").get<double>());
            }
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            reject_unknown(s, "synth", {"trajectories", "frames_per_trajectory"});
            read(s, "trajectories", c.synth.trajectories);
            read(s, "frames_per_trajectory", c.synth.frames_per_trajectory);
        }
        if (j.contains("gradcheck")) {
            const auto& s = j.at("gradcheck");
            reject_unknown(s, "gradcheck", {"draws", "patches", "step", "tolerance"});
            read(s, "draws", c.gradcheck.draws);
            read(s, "patches", c.gradcheck.patches);
            read(s, "step", c.gradcheck.step);
            read(s, "tolerance", c.gradcheck.tolerance);
        }
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace any3d
