#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "glyphforge/errors.hpp"
#include "glyphforge/model_config.hpp"

namespace glyphforge {

/// Trained (or initialized) model: config plus every parameter tensor in
/// declaration order.
struct ModelArtifact {
    static constexpr std::uint32_t kVersion = 1;
    ModelConfig config;
    std::vector<Tensor<float>> params;
};

/// Snapshot of a stack's current parameters.
inline ModelArtifact snapshot(const ModelConfig& cfg, LayerStack<float>& stack) {
    ModelArtifact art;
    art.config = cfg;
    for (const auto* p : stack.params()) art.params.push_back(*p);
    return art;
}

/// Rebuilds a runnable stack carrying the artifact's parameters.
inline LayerStack<float> build_stack(const ModelArtifact& art) {
    auto stack = build_model<float>(art.config, art.config.seed);
    auto params = stack.params();
    if (params.size() != art.params.size())
        throw IntegrityError("artifact has " + std::to_string(art.params.size()) +
                             " parameter tensors, config derives " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != art.params[i].shape())
            throw IntegrityError("artifact parameter " + std::to_string(i) + " has shape " +
                                 shape_str(art.params[i].shape()) + ", config derives " +
                                 shape_str(params[i]->shape()));
        *params[i] = art.params[i];
    }
    return stack;
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.append(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + off);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint32_t float_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

inline float bits_float(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

} // namespace detail

/// .hiec layout: magic `HIEC` | format version (u32 LE) | config length
/// (u32 LE) | config JSON (UTF-8) | raw float32 LE parameter data in
/// declaration order. Parameter shapes are derived from the config alone.
inline void save_model(const ModelArtifact& art, const std::string& path) {
    validate(art.config);
    const auto shapes = param_shapes(art.config);
    if (shapes.size() != art.params.size())
        throw IntegrityError("artifact parameter list does not match its config");
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i] != art.params[i].shape())
            throw IntegrityError("artifact parameter " + std::to_string(i) + " shape mismatch");

    std::string buf;
    buf.append("HIEC", 4);
    detail::put_u32(buf, ModelArtifact::kVersion);
    const std::string cfg_json = config_to_json(art.config).dump();
    detail::put_u32(buf, static_cast<std::uint32_t>(cfg_json.size()));
    buf.append(cfg_json);
    for (const auto& t : art.params)
        for (std::size_t i = 0; i < t.numel(); ++i)
            detail::put_u32(buf, detail::float_bits(t[i]));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model '" + path + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("model write failed for '" + path + "'");
}

inline ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read model '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || buf.compare(0, 4, "HIEC") != 0)
        throw FormatError("'" + path + "': bad magic at byte 0");
    if (buf.size() < 12)
        throw FormatError("'" + path + "': truncated header at byte " + std::to_string(buf.size()));
    const std::uint32_t version = detail::get_u32(buf, 4);
    if (version != ModelArtifact::kVersion)
        throw FormatError("'" + path + "': unsupported format version " + std::to_string(version) +
                          " at byte 4");
    const std::uint32_t cfg_len = detail::get_u32(buf, 8);
    if (buf.size() < 12 + static_cast<std::size_t>(cfg_len))
        throw FormatError("'" + path + "': truncated config at byte " + std::to_string(buf.size()));

    ModelArtifact art;
    try {
        const auto j = nlohmann::json::parse(buf.substr(12, cfg_len));
        art.config = config_from_json(j, "model");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + "': config JSON at byte 12 is invalid: " + e.what());
    }

    const auto shapes = param_shapes(art.config);
    std::size_t off = 12 + cfg_len;
    for (const auto& shape : shapes) {
        const std::size_t n = shape_numel(shape);
        if (buf.size() < off + 4 * n)
            throw FormatError("'" + path + "': truncated parameter data at byte " +
                              std::to_string(buf.size()) + " (need " + std::to_string(off + 4 * n) +
                              ")");
        auto t = Tensor<float>::zeros(shape);
        for (std::size_t i = 0; i < n; ++i)
            t[i] = detail::bits_float(detail::get_u32(buf, off + 4 * i));
        off += 4 * n;
        art.params.push_back(std::move(t));
    }
    if (off != buf.size())
        throw FormatError("'" + path + "': " + std::to_string(buf.size() - off) +
                          " trailing bytes at byte " + std::to_string(off));
    return art;
}

} // namespace glyphforge
