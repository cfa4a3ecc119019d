#include "any3d/binio.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace any3d::io {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path);
    return bytes;
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path);
    }
}

void write_text_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string resolve_data_path(const std::string& path) {
    const char* root = std::getenv("ANY3D_DATA_ROOT");
    if (!root || !*root || path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(root) / path).string();
}

}  // namespace any3d::io
