#include "ncn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ncn/error.hpp"

namespace ncn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "ncn-checkpoint";
constexpr int kVersion = 1;

void write_blob(const fs::path& path, std::span<const float> values) {
    std::string buf(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("cannot write " + path.string());
}

std::vector<float> read_blob(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() != count * 4) {
        throw DataError(path.string() + ": expected " + std::to_string(count * 4) + " bytes, found " +
                        std::to_string(buf.size()));
    }
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
        values[i] = std::bit_cast<float>(bits);
    }
    return values;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const std::vector<NamedTensor>& params, const std::string& meta_json) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = kFormat;
    manifest["version"] = kVersion;
    manifest["params"] = json::array();
    for (const auto& p : params) {
        const std::string file = p.name + ".f32";
        write_blob(dir / file, p.tensor.data());
        manifest["params"].push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"file", file}});
    }
    try {
        manifest["meta"] = json::parse(meta_json);
    } catch (const json::exception& e) {
        throw UsageError(std::string("save_checkpoint: meta is not valid JSON: ") + e.what());
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw DataError("checkpoint manifest not found: " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
        if (manifest.at("format") != kFormat) throw DataError(manifest_path.string() + ": not an ncn checkpoint");
        if (manifest.at("version") != kVersion) throw DataError(manifest_path.string() + ": unsupported version");
        Checkpoint ck;
        for (const auto& entry : manifest.at("params")) {
            const auto shape = entry.at("shape").get<Shape>();
            const auto file = entry.at("file").get<std::string>();
            if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
                throw DataError(manifest_path.string() + ": parameter file must be a plain name");
            }
            auto values = read_blob(dir / file, shape_numel(shape));
            ck.params.push_back({entry.at("name").get<std::string>(), Tensor(shape, std::move(values))});
        }
        ck.meta_json = manifest.value("meta", json::object()).dump();
        return ck;
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }
}

}  // namespace ncn
