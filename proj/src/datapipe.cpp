#include "any3d/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "any3d/binio.hpp"
#include "any3d/error.hpp"
#include "any3d/rng.hpp"

namespace any3d::datapipe {

using ojson = nlohmann::ordered_json;

void SourceMix::validate() const {
    require(!entries.empty(), "source mix: no sources");
    std::set<std::string> names;
    double total = 0.0;
    for (const auto& [name, p] : entries) {
        require(!name.empty(), "source mix: empty source name");
        require(names.insert(name).second, "source mix: duplicate source '" + name + "'");
        require(std::isfinite(p) && p >= 0.0, "source mix: probabilities must be >= 0");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, "source mix: probabilities must sum to 1");
}

bool SourceMix::contains(std::string_view name) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == name; });
}

SourceMix SourceMix::hybrid_default() {
    return {{{std::string(kSimulatorSource), 0.30}, {"UniDepthV2", 0.30}, {"DepthAnything3", 0.20}, {"MapAnything", 0.20}}};
}

SourceMix SourceMix::single(std::string name) { return {{{std::move(name), 1.0}}}; }

double trajectory_draw(std::uint64_t seed, std::string_view trajectory_id) {
    return to_unit(hash_combine(mix64(seed), fnv1a64(trajectory_id)));
}

std::string assign_source(const SourceMix& mix, std::uint64_t seed, std::string_view trajectory_id) {
    mix.validate();
    const double u = trajectory_draw(seed, trajectory_id);
    double cumulative = 0.0;
    for (const auto& [name, p] : mix.entries) {
        cumulative += p;
        if (u < cumulative) return name;
    }
    // Rounding left the cumulative sum just below 1: last source with p > 0.
    for (auto it = mix.entries.rbegin(); it != mix.entries.rend(); ++it)
        if (it->second > 0.0) return it->first;
    return mix.entries.back().first;
}

std::map<std::string, std::string> sample_sources(const SourceMix& mix, std::span<const std::string> trajectory_ids,
                                                  std::uint64_t seed) {
    mix.validate();
    std::map<std::string, std::string> out;
    for (const auto& id : trajectory_ids) out.emplace(id, assign_source(mix, seed, id));
    return out;
}

namespace {

ojson intrinsics_json(const CameraIntrinsics& c) {
    return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

CameraIntrinsics intrinsics_from(const nlohmann::json& j) {
    return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
            j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
}

std::string check_depth_file(const std::string& path, const CameraIntrinsics& expected) {
    const std::string resolved = io::resolve_data_path(path);
    if (!std::filesystem::exists(resolved)) return "missing depth file: " + path;
    try {
        const auto frame = read_depth(resolved);
        if (frame.intrinsics.width != expected.width || frame.intrinsics.height != expected.height)
            return "depth file size differs from the frame intrinsics: " + path;
    } catch (const std::exception& e) {
        return "malformed depth file: " + path + " (" + e.what() + ")";
    }
    return {};
}

}  // namespace

Manifest build_manifest(std::span<const FrameInput> frames, const SourceMix& mix, std::uint64_t seed,
                        const ManifestOptions& options) {
    mix.validate();
    Manifest m;
    for (const auto& [name, p] : mix.entries) m.summary[name] = 0;

    std::vector<std::string> ids;
    for (const auto& f : frames) ids.push_back(f.trajectory_id);
    const auto assignment = sample_sources(mix, ids, seed);

    for (const auto& f : frames) {
        FrameRecord r;
        r.trajectory_id = f.trajectory_id;
        r.frame_id = f.frame_id;
        r.rgb_path = f.rgb_path;
        r.intrinsics = f.intrinsics;
        r.depth_source = assignment.at(f.trajectory_id);
        const std::string where = f.trajectory_id + "/" + std::to_string(f.frame_id);

        if (f.trajectory_id.empty() || f.frame_id < 0 || f.rgb_path.empty())
            m.problems.push_back("invalid frame " + where + ": empty id or path, or negative frame id");
        const auto it = f.depth_paths.find(r.depth_source);
        if (it == f.depth_paths.end() || it->second.empty()) {
            m.problems.push_back("frame " + where + " has no depth file for source " + r.depth_source);
        } else {
            r.depth_path = it->second;
            if (options.validate_files) {
                if (auto problem = check_depth_file(r.depth_path, r.intrinsics); !problem.empty())
                    m.problems.push_back(problem);
            }
        }
        ++m.summary[r.depth_source];
        m.records.push_back(std::move(r));
    }
    return m;
}

std::string manifest_to_jsonl(const Manifest& m) {
    std::string out;
    for (const auto& r : m.records) {
        const ojson line = {{"trajectory_id", r.trajectory_id}, {"frame_id", r.frame_id},
                            {"rgb_path", r.rgb_path},           {"depth_source", r.depth_source},
                            {"depth_path", r.depth_path},       {"intrinsics", intrinsics_json(r.intrinsics)}};
        out += line.dump() + "\n";
    }
    ojson summary = ojson::object();
    for (const auto& [name, count] : m.summary) summary[name] = count;
    const ojson footer = {{"summary", summary}, {"validation", {{"ok", m.ok()}, {"problems", m.problems}}}};
    out += footer.dump() + "\n";
    return out;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    io::write_text_atomic(path, manifest_to_jsonl(manifest));
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    bool footer = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (footer) throw FormatError(path + ":" + std::to_string(lineno) + ": record after the summary footer");
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("summary")) {
                for (const auto& [name, count] : j.at("summary").items()) m.summary[name] = count.get<std::size_t>();
                if (j.contains("validation"))
                    m.problems = j.at("validation").at("problems").get<std::vector<std::string>>();
                footer = true;
                continue;
            }
            FrameRecord r;
            r.trajectory_id = j.at("trajectory_id").get<std::string>();
            r.frame_id = j.at("frame_id").get<std::int64_t>();
            r.rgb_path = j.at("rgb_path").get<std::string>();
            r.depth_source = j.at("depth_source").get<std::string>();
            r.depth_path = j.at("depth_path").get<std::string>();
            r.intrinsics = intrinsics_from(j.at("intrinsics"));
            m.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!footer) throw FormatError(path + ": missing summary footer");
    return m;
}

std::vector<std::string> inconsistent_trajectories(const Manifest& manifest) {
    std::map<std::string, std::string> first;
    std::set<std::string> bad;
    for (const auto& r : manifest.records) {
        auto [it, inserted] = first.emplace(r.trajectory_id, r.depth_source);
        if (!inserted && it->second != r.depth_source) bad.insert(r.trajectory_id);
    }
    return {bad.begin(), bad.end()};
}

}  // namespace any3d::datapipe
