#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "glyphforge/dataset.hpp"
#include "glyphforge/metrics.hpp"
#include "glyphforge/optim.hpp"
#include "glyphforge/serialize.hpp"

namespace glyphforge {

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    ModelArtifact best;
    std::vector<EpochLog> logs;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
    double best_val_loss = 0.0;
};

/// Maps a manifest path to decoded pixels. The default reads from disk;
/// tests and the synthetic pipeline inject in-memory stores.
using ImageLoader = std::function<Pixels(const std::string&)>;

inline ImageLoader disk_loader() {
    return [](const std::string& path) { return decode_image(path); };
}

/// Loader over an in-memory image set keyed by path.
inline ImageLoader memory_loader(std::vector<LabeledImage> images) {
    auto store = std::make_shared<std::map<std::string, Pixels>>();
    for (auto& img : images) (*store)[img.path] = std::move(img.pixels);
    return [store](const std::string& path) {
        auto it = store->find(path);
        if (it == store->end()) throw IoError("no in-memory image for '" + path + "'");
        return it->second;
    };
}

namespace detail {

struct LoadedSplit {
    std::vector<Pixels> pixels;
    std::vector<int> labels;
};

inline LoadedSplit load_split(const std::vector<ManifestEntry>& entries, const ImageLoader& loader,
                              std::size_t input_size) {
    LoadedSplit out;
    out.pixels.reserve(entries.size());
    out.labels.reserve(entries.size());
    for (const auto& e : entries) {
        Pixels px = loader(e.path);
        if (px.rank() != 3 || px.extent(0) != input_size || px.extent(1) != input_size ||
            px.extent(2) != 1)
            throw ShapeError("'" + e.path + "' is " + shape_str(px.shape()) +
                             ", model expects [" + std::to_string(input_size) + "," +
                             std::to_string(input_size) + ",1]");
        out.pixels.push_back(std::move(px));
        out.labels.push_back(e.label);
    }
    return out;
}

inline Tensor<float> gather_batch(const LoadedSplit& split, const std::vector<std::size_t>& order,
                                  std::size_t begin, std::size_t end, std::size_t input_size) {
    const std::size_t b = end - begin;
    auto batch = Tensor<float>::zeros({b, input_size, input_size, 1});
    const std::size_t per = input_size * input_size;
    for (std::size_t i = 0; i < b; ++i) {
        const Pixels& src = split.pixels[order[begin + i]];
        std::memcpy(batch.data() + i * per, src.data(), per * sizeof(float));
    }
    return batch;
}

/// Argmax with ties resolved to the lowest class index.
inline int argmax_row(const float* row, std::size_t k) {
    int best = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (row[j] > row[best]) best = static_cast<int>(j);
    return best;
}

struct EvalStats {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
};

inline EvalStats eval_pass(LayerStack<float>& stack, const LoadedSplit& split,
                           std::size_t batch_size, std::size_t input_size) {
    EvalStats stats;
    const std::size_t n = split.pixels.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        auto batch = gather_batch(split, order, begin, end, input_size);
        std::vector<int> labels(split.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                split.labels.begin() + static_cast<std::ptrdiff_t>(end));
        auto logits = stack.forward(batch, Mode::eval);
        auto lv = softmax_cross_entropy(logits, labels);
        loss_sum += static_cast<double>(lv.loss) * static_cast<double>(end - begin);
        for (std::size_t i = 0; i < end - begin; ++i) {
            const int pred = argmax_row(logits.data() + i * kNumClasses, kNumClasses);
            stats.predictions.push_back(pred);
            if (pred == labels[i]) ++correct;
        }
    }
    stats.mean_loss = loss_sum / static_cast<double>(n);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

} // namespace detail

/// Mini-batch training per the published setup: seeded per-epoch shuffle,
/// short final batch kept, dropout active in train mode only, validation in
/// eval mode after every epoch. The best checkpoint maximizes validation
/// accuracy with ties broken by lower validation loss, then earlier epoch.
inline TrainResult train(const ModelConfig& cfg, const SplitManifest& manifest,
                         const ImageLoader& loader = disk_loader(),
                         std::ostream* progress = nullptr) {
    validate(cfg);
    const auto train_entries = manifest.in_split(Split::train);
    const auto val_entries = manifest.in_split(Split::val);
    if (train_entries.empty()) throw DataError("manifest has no train split");
    if (val_entries.empty()) throw DataError("manifest has no val split");

    auto train_split = detail::load_split(train_entries, loader, cfg.input_size);
    auto val_split = detail::load_split(val_entries, loader, cfg.input_size);

    auto stack = build_model<float>(cfg, cfg.seed);
    AdamHyper hp;
    hp.lr = cfg.lr;
    AdamState<float> adam(stack.params(), hp);

    TrainResult result;
    const std::size_t n = train_split.pixels.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::derive(cfg.seed, 0xE70C0000ULL + epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            auto batch = detail::gather_batch(train_split, order, begin, end, cfg.input_size);
            std::vector<int> labels;
            labels.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i)
                labels.push_back(train_split.labels[order[i]]);

            auto logits = stack.forward(batch, Mode::train);
            auto lv = softmax_cross_entropy(logits, labels);
            if (std::isnan(lv.loss))
                throw NumericError("NaN loss at epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(batch_index));
            loss_sum += static_cast<double>(lv.loss) * static_cast<double>(end - begin);
            stack.backward(lv.grad);
            try {
                adam.step(stack.params(), stack.grads());
            } catch (const NumericError& e) {
                throw NumericError("aborted at epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(batch_index) + ": " + e.what());
            }
        }

        auto val = detail::eval_pass(stack, val_split, cfg.batch_size, cfg.input_size);
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(n);
        log.val_loss = val.mean_loss;
        log.val_accuracy = val.accuracy;
        result.logs.push_back(log);
        if (progress)
            *progress << "epoch=" << epoch << " train_loss=" << std::fixed << std::setprecision(6)
                      << log.train_loss << " val_loss=" << log.val_loss
                      << " val_acc=" << log.val_accuracy << std::defaultfloat << "\n";

        const bool better = result.best_epoch == 0 || val.accuracy > result.best_val_accuracy ||
                            (val.accuracy == result.best_val_accuracy &&
                             val.mean_loss < result.best_val_loss);
        if (better) {
            result.best_epoch = epoch;
            result.best_val_accuracy = val.accuracy;
            result.best_val_loss = val.mean_loss;
            result.best = snapshot(cfg, stack);
        }
    }
    return result;
}

/// Eval-mode pass over one split; prediction = argmax (ties to the lowest
/// class index). Model parameters are left untouched.
inline EvalReport evaluate(const ModelArtifact& artifact, const SplitManifest& manifest,
                           Split split, const ImageLoader& loader = disk_loader()) {
    const auto entries = manifest.in_split(split);
    if (entries.empty())
        throw DataError(std::string("manifest has no ") + split_name(split) + " split");
    auto data = detail::load_split(entries, loader, artifact.config.input_size);
    auto stack = build_stack(artifact);
    auto stats = detail::eval_pass(stack, data, artifact.config.batch_size,
                                   artifact.config.input_size);
    return report(confusion_matrix(data.labels, stats.predictions, kNumClasses));
}

/// Top-k letters with softmax probabilities for one image.
inline std::vector<std::pair<char, float>> predict(const ModelArtifact& artifact,
                                                   const Pixels& pixels, std::size_t top_k = 5) {
    auto stack = build_stack(artifact);
    const std::size_t s = artifact.config.input_size;
    if (pixels.rank() != 3 || pixels.extent(0) != s || pixels.extent(1) != s ||
        pixels.extent(2) != 1)
        throw ShapeError("predict input is " + shape_str(pixels.shape()) + ", model expects [" +
                         std::to_string(s) + "," + std::to_string(s) + ",1]");
    auto probs = softmax(stack.forward(pixels, Mode::eval));
    std::vector<std::size_t> idx(kNumClasses);
    for (std::size_t i = 0; i < kNumClasses; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    std::vector<std::pair<char, float>> out;
    for (std::size_t i = 0; i < std::min(top_k, static_cast<std::size_t>(kNumClasses)); ++i)
        out.emplace_back(static_cast<char>('a' + idx[i]), probs[idx[i]]);
    return out;
}

/// Loss-curve CSV: `epoch,train_loss,val_loss,val_accuracy`, six decimals.
inline void emit_loss_curve(const std::vector<EpochLog>& logs, const std::string& path) {
    if (logs.empty()) throw DataError("no epoch logs to emit");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write loss curve '" + path + "'");
    out << "epoch,train_loss,val_loss,val_accuracy\n" << std::fixed << std::setprecision(6);
    for (const auto& log : logs)
        out << log.epoch << ',' << log.train_loss << ',' << log.val_loss << ','
            << log.val_accuracy << '\n';
    if (!out) throw IoError("loss curve write failed for '" + path + "'");
}

} // namespace glyphforge
