#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "glyphforge/errors.hpp"
#include "glyphforge/layers.hpp"
#include "glyphforge/tensor.hpp"

namespace glyphforge {

/// Mean cross-entropy over a batch plus its gradient w.r.t. the logits.
template <typename T>
struct LossValue {
    T loss;
    Tensor<T> grad;
};

/// Fused softmax + cross-entropy via the log-sum-exp form:
/// loss = -(1/b) * sum_i ln p[i, label_i], grad = (p - onehot) / b.
/// logits may be [k] or [b,k]; labels are class indices in [0,k).
template <typename T>
LossValue<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    bool single = false;
    Tensor<T> z = detail::ensure_batched(logits, 1, single);
    const std::size_t b = z.extent(0), k = z.extent(1);
    if (labels.size() != b)
        throw DataError("expected " + std::to_string(b) + " labels, got " + std::to_string(labels.size()));
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw DataError("label " + std::to_string(y) + " out of range [0," + std::to_string(k) + ")");

    auto grad = Tensor<T>::zeros_like(z);
    const T inv_b = T(1) / static_cast<T>(b);
    T total = T(0);
    for (std::size_t r = 0; r < b; ++r) {
        const T* row = z.data() + r * k;
        T* grow = grad.data() + r * k;
        T mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        const T lse = mx + std::log(sum);
        total += lse - row[labels[r]];
        for (std::size_t j = 0; j < k; ++j)
            grow[j] = std::exp(row[j] - lse) * inv_b;
        grow[labels[r]] -= inv_b;
    }
    return {total * inv_b, detail::maybe_squeeze(std::move(grad), single)};
}

struct AdamHyper {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias-corrected moment estimates. One state instance owns the
/// moments for a fixed parameter list; step() is strictly sequential.
template <typename T>
class AdamState {
public:
    AdamState(const std::vector<Tensor<T>*>& params, AdamHyper hp = {}) : hp_(hp) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto* p : params) {
            m_.push_back(Tensor<T>::zeros(p->shape()));
            v_.push_back(Tensor<T>::zeros(p->shape()));
        }
    }

    std::size_t step_count() const { return t_; }
    const AdamHyper& hyper() const { return hp_; }
    const Tensor<T>& first_moment(std::size_t i) const { return m_[i]; }
    const Tensor<T>& second_moment(std::size_t i) const { return v_[i]; }

    /// One update across all parameter tensors. A NaN gradient aborts before
    /// any state is touched.
    void step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>*>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ShapeError("adam step with mismatched parameter list");
        for (std::size_t p = 0; p < params.size(); ++p) {
            if (!params[p]->same_shape(m_[p]) || !grads[p]->same_shape(m_[p]))
                throw ShapeError("adam parameter/gradient shape drifted");
            for (std::size_t i = 0; i < grads[p]->numel(); ++i)
                if (std::isnan((*grads[p])[i]))
                    throw NumericError("NaN gradient in parameter tensor " + std::to_string(p));
        }
        ++t_;
        const T b1 = static_cast<T>(hp_.beta1), b2 = static_cast<T>(hp_.beta2);
        const T bc1 = static_cast<T>(1.0 - std::pow(hp_.beta1, static_cast<double>(t_)));
        const T bc2 = static_cast<T>(1.0 - std::pow(hp_.beta2, static_cast<double>(t_)));
        const T lr = static_cast<T>(hp_.lr), eps = static_cast<T>(hp_.eps);
        for (std::size_t p = 0; p < params.size(); ++p) {
            Tensor<T>& theta = *params[p];
            const Tensor<T>& g = *grads[p];
            Tensor<T>& m = m_[p];
            Tensor<T>& v = v_[p];
            for (std::size_t i = 0; i < theta.numel(); ++i) {
                m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

private:
    AdamHyper hp_;
    std::size_t t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

} // namespace glyphforge
