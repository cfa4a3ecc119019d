#include "any3d/formats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "any3d/binio.hpp"
#include "any3d/error.hpp"

namespace any3d::io {
namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_type(const std::string& t, const std::string& what) {
    if (t == "char" || t == "int8") return PlyType::Int8;
    if (t == "uchar" || t == "uint8") return PlyType::UInt8;
    if (t == "short" || t == "int16") return PlyType::Int16;
    if (t == "ushort" || t == "uint16") return PlyType::UInt16;
    if (t == "int" || t == "int32") return PlyType::Int32;
    if (t == "uint" || t == "uint32") return PlyType::UInt32;
    if (t == "float" || t == "float32") return PlyType::Float32;
    if (t == "double" || t == "float64") return PlyType::Float64;
    throw FormatError(what + ": unsupported PLY property type '" + t + "'");
}

double read_binary(LeReader& in, PlyType t) {
    switch (t) {
        case PlyType::Int8: return in.get<std::int8_t>();
        case PlyType::UInt8: return in.get<std::uint8_t>();
        case PlyType::Int16: return in.get<std::int16_t>();
        case PlyType::UInt16: return in.get<std::uint16_t>();
        case PlyType::Int32: return in.get<std::int32_t>();
        case PlyType::UInt32: return in.get<std::uint32_t>();
        case PlyType::Float32: return in.get<float>();
        case PlyType::Float64: return in.get<double>();
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type;
};

std::uint8_t to_u8(float c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

std::vector<std::uint8_t> encode_ply(const PointCloud& cloud) {
    cloud.validate();
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << cloud.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (cloud.has_normals()) header << "property float nx\nproperty float ny\nproperty float nz\n";
    header << "end_header\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    bytes.reserve(h.size() + cloud.size() * (cloud.has_normals() ? 27 : 15));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) put_le(bytes, static_cast<float>(cloud.coords[i][a]));
        for (int a = 0; a < 3; ++a) bytes.push_back(to_u8(cloud.colors[i][a]));
        if (cloud.has_normals())
            for (int a = 0; a < 3; ++a) put_le(bytes, static_cast<float>(cloud.normals[i][a]));
    }
    return bytes;
}

void write_ply(const std::string& path, const PointCloud& cloud) { write_file_atomic(path, encode_ply(cloud)); }

PointCloud decode_ply(std::span<const std::uint8_t> bytes, const std::string& what) {
    // Header is ASCII lines up to "end_header\n".
    const std::string marker = "end_header";
    const auto* begin = reinterpret_cast<const char*>(bytes.data());
    const std::string head(begin, std::min<std::size_t>(bytes.size(), 1 << 16));
    const auto end_pos = head.find(marker);
    if (head.rfind("ply", 0) != 0 || end_pos == std::string::npos) throw FormatError(what + ": not a PLY file");
    std::size_t body = end_pos + marker.size();
    if (body < head.size() && head[body] == '\r') ++body;
    if (body >= head.size() || head[body] != '\n') throw FormatError(what + ": malformed PLY header terminator");
    ++body;

    std::istringstream hs(head.substr(0, end_pos));
    std::string line, format;
    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false;
    std::vector<PlyProperty> props;
    while (std::getline(hs, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            ls >> format;
        } else if (key == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) {
                vertex_count = count;
                seen_vertex = true;
            } else if (count != 0) {
                throw FormatError(what + ": only vertex elements are supported");
            }
        } else if (key == "property") {
            std::string type, name;
            ls >> type;
            if (type == "list") throw FormatError(what + ": list properties are not supported");
            ls >> name;
            if (in_vertex) props.push_back({name, parse_type(type, what)});
        }
    }
    if (!seen_vertex) throw FormatError(what + ": no vertex element");
    if (format != "binary_little_endian" && format != "ascii")
        throw FormatError(what + ": unsupported PLY format '" + format + "'");

    auto index_of = [&](const char* name) -> int {
        for (std::size_t i = 0; i < props.size(); ++i)
            if (props[i].name == name) return static_cast<int>(i);
        return -1;
    };
    const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
    if (ix < 0 || iy < 0 || iz < 0) throw FormatError(what + ": vertex element lacks x, y or z");
    const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
    const int inx = index_of("nx"), iny = index_of("ny"), inz = index_of("nz");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
    const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

    PointCloud cloud;
    cloud.coords.resize(vertex_count);
    cloud.colors.assign(vertex_count, Eigen::Vector3f::Zero());
    if (has_normals) cloud.normals.resize(vertex_count);
    std::vector<double> row(props.size());

    LeReader bin(bytes.subspan(body), what);
    std::istringstream ascii(format == "ascii" ? std::string(begin + body, bytes.size() - body) : std::string());
    for (std::size_t i = 0; i < vertex_count; ++i) {
        for (std::size_t p = 0; p < props.size(); ++p) {
            if (format == "ascii") {
                if (!(ascii >> row[p])) throw FormatError(what + ": truncated ASCII vertex data");
            } else {
                row[p] = read_binary(bin, props[p].type);
            }
        }
        cloud.coords[i] = {row[ix], row[iy], row[iz]};
        if (has_color) {
            const double scale = props[ir].type == PlyType::Float32 || props[ir].type == PlyType::Float64 ? 1.0 : 255.0;
            cloud.colors[i] = Eigen::Vector3f(static_cast<float>(row[ir] / scale), static_cast<float>(row[ig] / scale),
                                              static_cast<float>(row[ib] / scale));
        }
        if (has_normals) {
            Eigen::Vector3d n(row[inx], row[iny], row[inz]);
            // Foreign files may hold unnormalized normals. Ones already unit
            // to float precision are kept as stored so rewrites are lossless.
            const double len = n.norm();
            if (len > 0.0 && std::abs(len - 1.0) > 1e-6) n /= len;
            cloud.normals[i] = n;
        }
    }
    if (format != "ascii" && bin.remaining() != 0) throw FormatError(what + ": trailing bytes after vertex data");
    return cloud;
}

PointCloud read_ply(const std::string& path) {
    const auto bytes = read_file(path);
    return decode_ply(bytes, path);
}

void write_compressed(const std::string& ply_path, const std::string& sidecar_path, const CompressedCloud& comp) {
    require(comp.representatives.size() == comp.size(), "write_compressed: representatives and voxels differ in count");
    std::vector<std::uint8_t> side;
    side.reserve(comp.dense_size() * 4 + comp.size() * 24);
    for (std::uint32_t r : comp.inverse_index) {
        require(r < comp.size(), "write_compressed: inverse index outside [0, M)");
        put_le(side, r);
    }
    for (const auto& v : comp.voxel_coords)
        for (std::int64_t c : v) put_le(side, c);
    write_ply(ply_path, comp.representatives);
    write_file_atomic(sidecar_path, side);
}

CompressedCloud read_compressed(const std::string& ply_path, const std::string& sidecar_path) {
    CompressedCloud comp;
    comp.representatives = read_ply(ply_path);
    const std::size_t m = comp.representatives.size();
    const auto side = read_file(sidecar_path);
    if (side.size() < m * 24 || (side.size() - m * 24) % 4 != 0)
        throw FormatError(sidecar_path + ": size inconsistent with " + std::to_string(m) + " representatives");
    const std::size_t n = (side.size() - m * 24) / 4;
    LeReader in(side, sidecar_path);
    comp.inverse_index.resize(n);
    for (auto& r : comp.inverse_index) {
        r = in.get<std::uint32_t>();
        if (r >= m) throw FormatError(sidecar_path + ": inverse index out of range");
    }
    comp.voxel_coords.resize(m);
    for (auto& v : comp.voxel_coords)
        for (auto& c : v) c = in.get<std::int64_t>();
    return comp;
}

void write_feature_dump(const std::string& path, const FeatureDump& dump) {
    require(dump.values.size() == static_cast<std::size_t>(dump.count) * dump.dim && dump.mask.size() == dump.count,
            "feature dump: inconsistent sizes");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(8 + dump.values.size() * 4 + dump.mask.size());
    put_le(bytes, dump.count);
    put_le(bytes, dump.dim);
    for (float v : dump.values) put_le(bytes, v);
    bytes.insert(bytes.end(), dump.mask.begin(), dump.mask.end());
    write_file_atomic(path, bytes);
}

FeatureDump read_feature_dump(const std::string& path) {
    const auto bytes = read_file(path);
    LeReader in(bytes, path);
    FeatureDump d;
    d.count = in.get<std::uint32_t>();
    d.dim = in.get<std::uint32_t>();
    const std::size_t n = static_cast<std::size_t>(d.count) * d.dim;
    if (in.remaining() != n * 4 + d.count)
        throw FormatError(path + ": payload size does not match header (" + std::to_string(d.count) + " x " +
                          std::to_string(d.dim) + ")");
    d.values.resize(n);
    for (float& v : d.values) v = in.get<float>();
    d.mask.resize(d.count);
    for (auto& b : d.mask) b = in.get<std::uint8_t>();
    return d;
}

FeatureDump to_dump(const PatchFeatureGrid& grid) {
    return {static_cast<std::uint32_t>(grid.size()), static_cast<std::uint32_t>(grid.dim), grid.features, grid.empty_mask};
}

FeatureDump to_dump(std::span<const double> values, std::size_t dim, std::span<const std::uint8_t> mask) {
    require(dim > 0 && values.size() == mask.size() * dim, "feature dump: inconsistent sizes");
    FeatureDump d{static_cast<std::uint32_t>(mask.size()), static_cast<std::uint32_t>(dim), {}, {mask.begin(), mask.end()}};
    d.values.reserve(values.size());
    for (double v : values) d.values.push_back(static_cast<float>(v));
    return d;
}

}  // namespace any3d::io
