#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "any3d/binio.hpp"
#include "any3d/datapipe.hpp"

namespace any3d::datapipe {

std::string depth_sidecar_path(const std::string& depth_path) { return depth_path + ".json"; }

void write_depth(const std::string& path, const DepthImage& depth, const CameraIntrinsics& intr) {
    intr.validate();
    require(depth.width == intr.width && depth.height == intr.height,
            "write_depth: depth dimensions do not match the intrinsics");
    require(depth.values.size() == static_cast<std::size_t>(depth.width) * depth.height,
            "write_depth: value count does not match width x height");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(depth.values.size() * 4);
    for (float d : depth.values) {
        require(std::isfinite(d), "write_depth: non-finite depth value");
        require(d >= 0.0f, "write_depth: negative depth value");
        io::put_le(bytes, d == 0.0f ? 0.0f : d);  // -0.0 stored as +0.0
    }
    const nlohmann::ordered_json sidecar = {{"fx", intr.fx},       {"fy", intr.fy},         {"cx", intr.cx},
                                            {"cy", intr.cy},       {"width", intr.width},   {"height", intr.height}};
    io::write_file_atomic(path, bytes);
    io::write_text_atomic(depth_sidecar_path(path), sidecar.dump() + "\n");
}

CameraIntrinsics read_depth_sidecar(const std::string& path) {
    const auto bytes = io::read_file(depth_sidecar_path(path));
    CameraIntrinsics intr;
    try {
        const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
        intr.fx = j.at("fx").get<double>();
        intr.fy = j.at("fy").get<double>();
        intr.cx = j.at("cx").get<double>();
        intr.cy = j.at("cy").get<double>();
        intr.width = j.at("width").get<int>();
        intr.height = j.at("height").get<int>();
        intr.validate();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(depth_sidecar_path(path) + ": " + e.what());
    } catch (const PreconditionError& e) {
        throw FormatError(depth_sidecar_path(path) + ": " + e.what());
    }
    return intr;
}

DepthFrame read_depth(const std::string& path) {
    DepthFrame frame;
    frame.intrinsics = read_depth_sidecar(path);
    const auto bytes = io::read_file(path);
    const std::size_t n = static_cast<std::size_t>(frame.intrinsics.width) * frame.intrinsics.height;
    if (bytes.size() != n * 4)
        throw FormatError(path + ": payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(n * 4) + " for " + std::to_string(frame.intrinsics.width) + "x" +
                          std::to_string(frame.intrinsics.height));
    frame.depth = DepthImage(frame.intrinsics.width, frame.intrinsics.height);
    io::LeReader in(bytes, path);
    for (float& d : frame.depth.values) {
        d = in.get<float>();
        if (!std::isfinite(d) || d < 0.0f) throw FormatError(path + ": depth values must be finite and >= 0");
    }
    return frame;
}

void write_ppm(const std::string& path, const RgbImage& rgb) {
    rgb.validate();
    const std::string header = "P6\n" + std::to_string(rgb.width) + " " + std::to_string(rgb.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(header.size() + rgb.values.size() * 3);
    for (const auto& c : rgb.values)
        for (int ch = 0; ch < 3; ++ch) bytes.push_back(static_cast<std::uint8_t>(std::lround(c[ch] * 255.0f)));
    io::write_file_atomic(path, bytes);
}

RgbImage read_ppm(const std::string& path) {
    const auto bytes = io::read_file(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    if (token() != "P6") throw FormatError(path + ": not a binary PPM (P6)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw FormatError(path + ": malformed PPM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) throw FormatError(path + ": unsupported PPM dimensions or maxval");
    ++pos;  // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (bytes.size() < pos || bytes.size() - pos != n * 3) throw FormatError(path + ": PPM payload size mismatch");
    RgbImage rgb(w, h);
    for (std::size_t i = 0; i < n; ++i)
        for (int ch = 0; ch < 3; ++ch) rgb.values[i][ch] = static_cast<float>(bytes[pos + 3 * i + ch]) / 255.0f;
    return rgb;
}

}  // namespace any3d::datapipe
