#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyphforge/errors.hpp"
#include "glyphforge/layers.hpp"

namespace glyphforge {

inline constexpr std::size_t kNumClasses = 26;

/// Declarative architecture description; one Table-style configuration row.
/// The 26-way softmax output layer is implicit and always present.
struct ModelConfig {
    std::string name = "model";
    std::size_t input_size = 224;
    std::size_t input_channels = 1;
    std::vector<std::size_t> conv_filters;
    std::vector<std::size_t> hidden_neurons;
    double dropout_rate = 0.0;
    double lr = 0.001;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 42;
};

/// Spatial size after each conv/pool pair: s -> floor((s-2)/2). Throws
/// ConfigError naming the first block that underflows.
inline std::vector<std::size_t> conv_size_chain(const ModelConfig& cfg) {
    std::vector<std::size_t> sizes{cfg.input_size};
    std::size_t s = cfg.input_size;
    for (std::size_t b = 0; b < cfg.conv_filters.size(); ++b) {
        if (s < 3)
            throw ConfigError("config '" + cfg.name + "': input size " +
                              std::to_string(cfg.input_size) + " underflows at block " +
                              std::to_string(b + 1) + "'s conv (remaining extent " +
                              std::to_string(s) + " < 3)");
        s -= 2;
        s /= 2;
        if (s < 1)
            throw ConfigError("config '" + cfg.name + "': input size " +
                              std::to_string(cfg.input_size) + " underflows at block " +
                              std::to_string(b + 1) + "'s pool");
        sizes.push_back(s);
    }
    return sizes;
}

inline std::size_t flatten_size(const ModelConfig& cfg) {
    const auto chain = conv_size_chain(cfg);
    return chain.back() * chain.back() * cfg.conv_filters.back();
}

inline void validate(const ModelConfig& cfg) {
    if (cfg.conv_filters.empty())
        throw ConfigError("config '" + cfg.name + "': conv_filters must be nonempty");
    for (std::size_t f : cfg.conv_filters)
        if (f == 0) throw ConfigError("config '" + cfg.name + "': zero conv filter count");
    for (std::size_t n : cfg.hidden_neurons)
        if (n == 0) throw ConfigError("config '" + cfg.name + "': zero hidden width");
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
        throw ConfigError("config '" + cfg.name + "': dropout_rate must be in [0,1)");
    if (!(cfg.lr >= 0.0)) throw ConfigError("config '" + cfg.name + "': lr must be >= 0");
    if (cfg.batch_size == 0) throw ConfigError("config '" + cfg.name + "': batch_size must be >= 1");
    if (cfg.epochs == 0) throw ConfigError("config '" + cfg.name + "': epochs must be >= 1");
    if (cfg.input_channels != 1)
        throw ConfigError("config '" + cfg.name + "': only single-channel input is supported");
    conv_size_chain(cfg);
}

/// Parameter tensor shapes in declaration order; fully determined by the
/// config, which is what makes the model file self-describing.
inline std::vector<Shape> param_shapes(const ModelConfig& cfg) {
    std::vector<Shape> shapes;
    std::size_t cin = cfg.input_channels;
    for (std::size_t f : cfg.conv_filters) {
        shapes.push_back({3, 3, cin, f});
        shapes.push_back({f});
        cin = f;
    }
    std::size_t width = flatten_size(cfg);
    for (std::size_t n : cfg.hidden_neurons) {
        shapes.push_back({width, n});
        shapes.push_back({n});
        width = n;
    }
    shapes.push_back({width, kNumClasses});
    shapes.push_back({kNumClasses});
    return shapes;
}

/// Closed-form parameter count:
/// sum conv (9*cin*cout + cout) + sum dense (in*out + out), output layer included.
inline std::uint64_t count_parameters(const ModelConfig& cfg) {
    validate(cfg);
    std::uint64_t total = 0;
    std::uint64_t cin = cfg.input_channels;
    for (std::size_t f : cfg.conv_filters) {
        total += 9 * cin * f + f;
        cin = f;
    }
    std::uint64_t width = flatten_size(cfg);
    for (std::size_t n : cfg.hidden_neurons) {
        total += width * n + n;
        width = n;
    }
    total += width * kNumClasses + kNumClasses;
    return total;
}

/// [Conv+ReLU+MaxPool] per filter count, Flatten, [Dense+ReLU] per hidden
/// width, one Dropout when the rate is nonzero, then the 26-way output
/// layer. He-uniform init, biases zero, all draws from the given seed.
template <typename T>
LayerStack<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Rng init = Rng::derive(seed, 0x1417);
    LayerStack<T> stack({cfg.input_size, cfg.input_size, cfg.input_channels});
    std::size_t cin = cfg.input_channels;
    for (std::size_t f : cfg.conv_filters) {
        stack.add(std::make_unique<Conv2D<T>>(Conv2D<T>::he_init(cin, f, init)));
        stack.add(std::make_unique<ReLU<T>>());
        stack.add(std::make_unique<MaxPool2D<T>>());
        cin = f;
    }
    stack.add(std::make_unique<Flatten<T>>());
    std::size_t width = flatten_size(cfg);
    for (std::size_t n : cfg.hidden_neurons) {
        stack.add(std::make_unique<Dense<T>>(Dense<T>::he_init(width, n, init)));
        stack.add(std::make_unique<ReLU<T>>());
        width = n;
    }
    if (cfg.dropout_rate > 0.0)
        stack.add(std::make_unique<Dropout<T>>(cfg.dropout_rate, Rng::derive(seed, 0xD509)));
    stack.add(std::make_unique<Dense<T>>(Dense<T>::he_init(width, kNumClasses, init)));
    stack.shape_chain();  // cross-validates layer compatibility
    return stack;
}

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"name", cfg.name},
                          {"input_size", cfg.input_size},
                          {"input_channels", cfg.input_channels},
                          {"conv_filters", cfg.conv_filters},
                          {"hidden_neurons", cfg.hidden_neurons},
                          {"dropout_rate", cfg.dropout_rate},
                          {"lr", cfg.lr},
                          {"batch_size", cfg.batch_size},
                          {"epochs", cfg.epochs},
                          {"seed", cfg.seed}};
}

inline ModelConfig config_from_json(const nlohmann::json& j, const std::string& fallback_name) {
    static const std::vector<std::string> known{
        "name",         "input_size", "input_channels", "conv_filters", "hidden_neurons",
        "dropout_rate", "lr",         "batch_size",     "epochs",       "seed"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config field '" + key + "' is not recognized");
    ModelConfig cfg;
    cfg.name = j.value("name", fallback_name);
    try {
        cfg.input_size = j.value("input_size", cfg.input_size);
        cfg.input_channels = j.value("input_channels", cfg.input_channels);
        cfg.conv_filters = j.value("conv_filters", cfg.conv_filters);
        cfg.hidden_neurons = j.value("hidden_neurons", cfg.hidden_neurons);
        cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + cfg.name + "': " + e.what());
    }
    validate(cfg);
    return cfg;
}

inline ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::filesystem::path(path).stem().string());
}

} // namespace glyphforge
