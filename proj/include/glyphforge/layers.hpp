#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "glyphforge/errors.hpp"
#include "glyphforge/rng.hpp"
#include "glyphforge/tensor.hpp"

namespace glyphforge {

enum class Mode { train, eval };

/// He-uniform draw: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <typename T>
Tensor<T> he_uniform(const Shape& shape, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    auto t = Tensor<T>::zeros(shape);
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(rng.uniform(-limit, limit));
    return t;
}

/// One layer of the recognition stack. forward in train mode caches whatever
/// backward needs; eval mode leaves the layer untouched, so eval inference is
/// pure and shareable across threads.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T>& input, Mode mode) = 0;
    /// Gradient w.r.t. the layer input; parameter gradients land in grads().
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

    virtual std::vector<Tensor<T>*> params() { return {}; }
    virtual std::vector<Tensor<T>*> grads() { return {}; }

    virtual std::string name() const = 0;
    /// Per-sample shape inference; throws ShapeError on an incompatible input.
    virtual Shape output_shape(const Shape& in) const = 0;
};

namespace detail {

// Lift a per-sample tensor to batch-of-one if needed. sample_rank is the
// expected per-sample rank (3 for image layers, 1 for dense-side layers).
template <typename T>
Tensor<T> ensure_batched(const Tensor<T>& t, std::size_t sample_rank, bool& was_single) {
    if (t.rank() == sample_rank) {
        was_single = true;
        Shape s{1};
        s.insert(s.end(), t.shape().begin(), t.shape().end());
        return reshape(t, s);
    }
    if (t.rank() == sample_rank + 1) {
        was_single = false;
        return t;
    }
    throw ShapeError("expected rank " + std::to_string(sample_rank) + " or " +
                     std::to_string(sample_rank + 1) + " input, got " + shape_str(t.shape()));
}

template <typename T>
Tensor<T> maybe_squeeze(Tensor<T> t, bool was_single) {
    if (!was_single) return t;
    Shape s(t.shape().begin() + 1, t.shape().end());
    return reshape(t, s);
}

// Patch matrix for 3x3 valid conv: row (s,y,x), column (dy,dx,c).
template <typename T>
Tensor<T> im2col3x3(const Tensor<T>& in) {
    const std::size_t b = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
    const std::size_t oh = h - 2, ow = w - 2;
    auto patches = Tensor<T>::zeros({b * oh * ow, 9 * c});
    const std::size_t strip = 3 * c;
    parallel_for(b, 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const T* img = in.data() + s * h * w * c;
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    T* row = patches.data() + ((s * oh + y) * ow + x) * 9 * c;
                    for (std::size_t dy = 0; dy < 3; ++dy)
                        std::memcpy(row + dy * strip, img + ((y + dy) * w + x) * c, strip * sizeof(T));
                }
        }
    });
    return patches;
}

// Scatter-add of patch-space gradients back to image space.
template <typename T>
Tensor<T> col2im3x3(const Tensor<T>& grad_patches, std::size_t b, std::size_t h,
                    std::size_t w, std::size_t c) {
    const std::size_t oh = h - 2, ow = w - 2;
    auto grad_in = Tensor<T>::zeros({b, h, w, c});
    const std::size_t strip = 3 * c;
    parallel_for(b, 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            T* img = grad_in.data() + s * h * w * c;
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    const T* row = grad_patches.data() + ((s * oh + y) * ow + x) * 9 * c;
                    for (std::size_t dy = 0; dy < 3; ++dy) {
                        T* dst = img + ((y + dy) * w + x) * c;
                        const T* src = row + dy * strip;
                        for (std::size_t i = 0; i < strip; ++i) dst[i] += src[i];
                    }
                }
        }
    });
    return grad_in;
}

} // namespace detail

/// 3x3 valid-padding stride-1 convolution, computed as im2col + matmul.
/// kernels laid out [3,3,in_ch,out_ch].
template <typename T>
class Conv2D : public Layer<T> {
public:
    Conv2D(Tensor<T> kernels, Tensor<T> bias)
        : kernels_(std::move(kernels)), bias_(std::move(bias)) {
        if (kernels_.rank() != 4 || kernels_.extent(0) != 3 || kernels_.extent(1) != 3)
            throw ShapeError("conv kernels must be [3,3,in_ch,out_ch], got " + shape_str(kernels_.shape()));
        if (bias_.rank() != 1 || bias_.extent(0) != kernels_.extent(3))
            throw ShapeError("conv bias must be [out_ch]");
        grad_kernels_ = Tensor<T>::zeros_like(kernels_);
        grad_bias_ = Tensor<T>::zeros_like(bias_);
    }

    static Conv2D he_init(std::size_t in_ch, std::size_t out_ch, Rng& rng) {
        auto k = he_uniform<T>({3, 3, in_ch, out_ch}, 9 * in_ch, rng);
        return Conv2D(std::move(k), Tensor<T>::zeros({out_ch}));
    }

    std::size_t in_channels() const { return kernels_.extent(2); }
    std::size_t out_channels() const { return kernels_.extent(3); }

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        bool single = false;
        Tensor<T> in = detail::ensure_batched(input, 3, single);
        const std::size_t b = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
        if (h < 3 || w < 3)
            throw ShapeError("conv input " + shape_str(input.shape()) + " smaller than 3x3 kernel");
        if (c != in_channels())
            throw ShapeError("conv expects " + std::to_string(in_channels()) + " channels, got " +
                             std::to_string(c));
        const std::size_t oh = h - 2, ow = w - 2, oc = out_channels();

        auto patches = detail::im2col3x3(in);
        auto out_mat = matmul(patches, reshape(kernels_, {9 * c, oc}));
        for (std::size_t r = 0; r < b * oh * ow; ++r) {
            T* row = out_mat.data() + r * oc;
            for (std::size_t o = 0; o < oc; ++o) row[o] += bias_[o];
        }
        if (mode == Mode::train) cached_input_ = std::move(in);
        return detail::maybe_squeeze(reshape(out_mat, {b, oh, ow, oc}), single);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (cached_input_.numel() == 0)
            throw StateError("conv backward called before a train-mode forward");
        const Tensor<T>& in = cached_input_;
        const std::size_t b = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
        const std::size_t oh = h - 2, ow = w - 2, oc = out_channels();

        bool single = false;
        Tensor<T> g = detail::ensure_batched(grad_out, 3, single);
        if (g.shape() != Shape{b, oh, ow, oc})
            throw ShapeError("conv grad shape " + shape_str(grad_out.shape()) +
                             " does not match forward output");
        auto g_mat = reshape(g, {b * oh * ow, oc});

        for (std::size_t o = 0; o < oc; ++o) grad_bias_[o] = T(0);
        for (std::size_t r = 0; r < b * oh * ow; ++r) {
            const T* row = g_mat.data() + r * oc;
            for (std::size_t o = 0; o < oc; ++o) grad_bias_[o] += row[o];
        }

        auto patches = detail::im2col3x3(in);
        grad_kernels_ = reshape(matmul_at(patches, g_mat), {3, 3, c, oc});
        auto grad_patches = matmul(g_mat, transpose(reshape(kernels_, {9 * c, oc})));
        auto grad_in = detail::col2im3x3(grad_patches, b, h, w, c);
        return detail::maybe_squeeze(std::move(grad_in), single);
    }

    std::vector<Tensor<T>*> params() override { return {&kernels_, &bias_}; }
    std::vector<Tensor<T>*> grads() override { return {&grad_kernels_, &grad_bias_}; }
    std::string name() const override { return "conv"; }

    Shape output_shape(const Shape& in) const override {
        if (in.size() != 3)
            throw ShapeError("conv expects [h,w,c] samples, got " + shape_str(in));
        if (in[0] < 3 || in[1] < 3)
            throw ShapeError("conv input " + shape_str(in) + " smaller than 3x3 kernel");
        if (in[2] != in_channels())
            throw ShapeError("conv expects " + std::to_string(in_channels()) + " channels");
        return {in[0] - 2, in[1] - 2, out_channels()};
    }

    const Tensor<T>& kernels() const { return kernels_; }
    const Tensor<T>& bias() const { return bias_; }

private:
    Tensor<T> kernels_, bias_;
    Tensor<T> grad_kernels_, grad_bias_;
    Tensor<T> cached_input_;
};

/// 2x2 max pool, stride 2; a trailing odd row/column is dropped. Backward
/// routes each gradient to the window's argmax (ties: first cell in
/// row-major scan order).
template <typename T>
class MaxPool2D : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        bool single = false;
        Tensor<T> in = detail::ensure_batched(input, 3, single);
        const std::size_t b = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
        if (h < 2 || w < 2)
            throw ShapeError("maxpool input " + shape_str(input.shape()) + " smaller than 2x2 window");
        const std::size_t oh = h / 2, ow = w / 2;

        auto out = Tensor<T>::zeros({b, oh, ow, c});
        std::vector<std::size_t> argmax(mode == Mode::train ? out.numel() : 0);
        parallel_for(b, 1, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t s = lo; s < hi; ++s)
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x)
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            std::size_t best_idx = ((s * h + 2 * y) * w + 2 * x) * c + ch;
                            T best = in[best_idx];
                            for (std::size_t dy = 0; dy < 2; ++dy)
                                for (std::size_t dx = 0; dx < 2; ++dx) {
                                    std::size_t idx = ((s * h + 2 * y + dy) * w + 2 * x + dx) * c + ch;
                                    if (in[idx] > best) { best = in[idx]; best_idx = idx; }
                                }
                            std::size_t out_idx = ((s * oh + y) * ow + x) * c + ch;
                            out[out_idx] = best;
                            if (mode == Mode::train) argmax[out_idx] = best_idx;
                        }
        });
        if (mode == Mode::train) {
            argmax_ = std::move(argmax);
            in_shape_ = {b, h, w, c};
        }
        return detail::maybe_squeeze(std::move(out), single);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (argmax_.empty()) throw StateError("maxpool backward called before a train-mode forward");
        bool single = false;
        Tensor<T> g = detail::ensure_batched(grad_out, 3, single);
        if (g.numel() != argmax_.size())
            throw ShapeError("maxpool grad shape does not match forward output");
        auto grad_in = Tensor<T>::zeros(in_shape_);
        for (std::size_t i = 0; i < argmax_.size(); ++i) grad_in[argmax_[i]] += g[i];
        return detail::maybe_squeeze(std::move(grad_in), single);
    }

    std::string name() const override { return "maxpool"; }

    Shape output_shape(const Shape& in) const override {
        if (in.size() != 3)
            throw ShapeError("maxpool expects [h,w,c] samples, got " + shape_str(in));
        if (in[0] < 2 || in[1] < 2)
            throw ShapeError("maxpool input " + shape_str(in) + " smaller than 2x2 window");
        return {in[0] / 2, in[1] / 2, in[2]};
    }

private:
    std::vector<std::size_t> argmax_;
    Shape in_shape_;
};

/// Fully connected layer: out = x.W + b with weights [in_dim, out_dim].
template <typename T>
class Dense : public Layer<T> {
public:
    Dense(Tensor<T> weights, Tensor<T> bias)
        : weights_(std::move(weights)), bias_(std::move(bias)) {
        if (weights_.rank() != 2) throw ShapeError("dense weights must be [in,out]");
        if (bias_.rank() != 1 || bias_.extent(0) != weights_.extent(1))
            throw ShapeError("dense bias must be [out]");
        grad_weights_ = Tensor<T>::zeros_like(weights_);
        grad_bias_ = Tensor<T>::zeros_like(bias_);
    }

    static Dense he_init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
        auto w = he_uniform<T>({in_dim, out_dim}, in_dim, rng);
        return Dense(std::move(w), Tensor<T>::zeros({out_dim}));
    }

    std::size_t in_dim() const { return weights_.extent(0); }
    std::size_t out_dim() const { return weights_.extent(1); }

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        bool single = false;
        Tensor<T> in = detail::ensure_batched(input, 1, single);
        if (in.extent(1) != in_dim())
            throw ShapeError("dense expects length " + std::to_string(in_dim()) + ", got " +
                             std::to_string(in.extent(1)));
        auto out = matmul(in, weights_);
        const std::size_t b = in.extent(0), m = out_dim();
        for (std::size_t r = 0; r < b; ++r) {
            T* row = out.data() + r * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += bias_[j];
        }
        if (mode == Mode::train) cached_input_ = std::move(in);
        return detail::maybe_squeeze(std::move(out), single);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (cached_input_.numel() == 0)
            throw StateError("dense backward called before a train-mode forward");
        bool single = false;
        Tensor<T> g = detail::ensure_batched(grad_out, 1, single);
        const std::size_t b = cached_input_.extent(0), m = out_dim();
        if (g.shape() != Shape{b, m})
            throw ShapeError("dense grad shape does not match forward output");

        grad_weights_ = matmul_at(cached_input_, g);
        for (std::size_t j = 0; j < m; ++j) grad_bias_[j] = T(0);
        for (std::size_t r = 0; r < b; ++r) {
            const T* row = g.data() + r * m;
            for (std::size_t j = 0; j < m; ++j) grad_bias_[j] += row[j];
        }
        auto grad_in = matmul(g, transpose(weights_));
        return detail::maybe_squeeze(std::move(grad_in), single);
    }

    std::vector<Tensor<T>*> params() override { return {&weights_, &bias_}; }
    std::vector<Tensor<T>*> grads() override { return {&grad_weights_, &grad_bias_}; }
    std::string name() const override { return "dense"; }

    Shape output_shape(const Shape& in) const override {
        if (in.size() != 1 || in[0] != in_dim())
            throw ShapeError("dense expects [" + std::to_string(in_dim()) + "] samples, got " +
                             shape_str(in));
        return {out_dim()};
    }

    const Tensor<T>& weights() const { return weights_; }
    const Tensor<T>& bias() const { return bias_; }

private:
    Tensor<T> weights_, bias_;
    Tensor<T> grad_weights_, grad_bias_;
    Tensor<T> cached_input_;
};

/// max(0, x). The subgradient at exactly 0 is fixed to 0.
template <typename T>
class ReLU : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        auto out = Tensor<T>::zeros_like(input);
        for (std::size_t i = 0; i < input.numel(); ++i)
            out[i] = input[i] > T(0) ? input[i] : T(0);
        if (mode == Mode::train) cached_input_ = input;
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (cached_input_.numel() == 0)
            throw StateError("relu backward called before a train-mode forward");
        if (!grad_out.same_shape(cached_input_))
            throw ShapeError("relu grad shape does not match forward input");
        auto grad_in = Tensor<T>::zeros_like(grad_out);
        for (std::size_t i = 0; i < grad_out.numel(); ++i)
            grad_in[i] = cached_input_[i] > T(0) ? grad_out[i] : T(0);
        return grad_in;
    }

    std::string name() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }

private:
    Tensor<T> cached_input_;
};

/// Inverted dropout: kept elements are scaled by 1/(1-p) at train time so the
/// eval-mode forward is the exact identity.
template <typename T>
class Dropout : public Layer<T> {
public:
    Dropout(double rate, Rng rng) : rate_(rate), rng_(std::move(rng)) {
        if (!(rate >= 0.0 && rate < 1.0))
            throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    }

    /// Rewinds the mask stream; the gradient checker uses this to freeze the
    /// mask across repeated forward evaluations.
    void reseed(std::uint64_t seed, std::uint64_t stream) { rng_ = Rng::derive(seed, stream); }

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        if (mode == Mode::eval) return input;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        mask_ = Tensor<T>::zeros_like(input);
        auto out = Tensor<T>::zeros_like(input);
        for (std::size_t i = 0; i < input.numel(); ++i) {
            const T m = rng_.uniform() >= rate_ ? scale : T(0);
            mask_[i] = m;
            out[i] = input[i] * m;
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (mask_.numel() == 0)
            throw StateError("dropout backward called before a train-mode forward");
        return mul(grad_out, mask_);
    }

    std::string name() const override { return "dropout"; }
    Shape output_shape(const Shape& in) const override { return in; }

    double rate() const { return rate_; }
    const Tensor<T>& mask() const { return mask_; }

private:
    double rate_;
    Rng rng_;
    Tensor<T> mask_;
};

/// [h,w,c] -> [h*w*c] (per sample). Pure reshape, values untouched.
template <typename T>
class Flatten : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
        if (input.rank() == 3) {
            if (mode == Mode::train) in_shape_ = input.shape();
            return reshape(input, {input.numel()});
        }
        if (input.rank() == 4) {
            const std::size_t b = input.extent(0);
            if (mode == Mode::train) in_shape_ = input.shape();
            return reshape(input, {b, input.numel() / b});
        }
        throw ShapeError("flatten expects rank 3 or 4 input, got " + shape_str(input.shape()));
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        if (in_shape_.empty()) throw StateError("flatten backward called before a train-mode forward");
        return reshape(grad_out, in_shape_);
    }

    std::string name() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override {
        if (in.size() != 3) throw ShapeError("flatten expects [h,w,c] samples, got " + shape_str(in));
        return {in[0] * in[1] * in[2]};
    }

private:
    Shape in_shape_;
};

/// Row-wise stabilized softmax; accepts [k] or [b,k].
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    bool single = false;
    Tensor<T> z = detail::ensure_batched(logits, 1, single);
    const std::size_t b = z.extent(0), k = z.extent(1);
    auto p = Tensor<T>::zeros_like(z);
    for (std::size_t r = 0; r < b; ++r) {
        const T* row = z.data() + r * k;
        T* out = p.data() + r * k;
        T mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < k; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
    }
    return detail::maybe_squeeze(std::move(p), single);
}

/// Ordered layers forming one model; forward yields logits (softmax is fused
/// into the loss, or applied explicitly for prediction).
template <typename T>
class LayerStack {
public:
    LayerStack() = default;
    explicit LayerStack(Shape input_shape) : input_shape_(std::move(input_shape)) {}

    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }
    const Shape& input_shape() const { return input_shape_; }

    Tensor<T> forward(const Tensor<T>& batch, Mode mode) {
        Tensor<T> cur = batch;
        for (auto& l : layers_) cur = l->forward(cur, mode);
        return cur;
    }

    /// Backpropagates grad (w.r.t. logits) through every layer; parameter
    /// gradients are left in each layer's grads().
    Tensor<T> backward(const Tensor<T>& grad_logits) {
        Tensor<T> cur = grad_logits;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            cur = (*it)->backward(cur);
        return cur;
    }

    /// All parameter tensors in declaration order.
    std::vector<Tensor<T>*> params() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<Tensor<T>*> grads() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_)
            for (auto* g : l->grads()) out.push_back(g);
        return out;
    }

    /// Per-sample shape after every layer, starting from input_shape().
    /// Throws ConfigError naming the first incompatible layer.
    std::vector<Shape> shape_chain() const {
        std::vector<Shape> chain{input_shape_};
        Shape cur = input_shape_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            try {
                cur = layers_[i]->output_shape(cur);
            } catch (const ShapeError& e) {
                throw ConfigError("layer " + std::to_string(i) + " (" + layers_[i]->name() +
                                  "): " + e.what());
            }
            chain.push_back(cur);
        }
        return chain;
    }

private:
    Shape input_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

} // namespace glyphforge
