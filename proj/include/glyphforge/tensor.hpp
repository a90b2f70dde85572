#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "glyphforge/errors.hpp"
#include "glyphforge/parallel.hpp"

namespace glyphforge {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline void check_shape_valid(const Shape& s) {
    if (s.empty()) throw ShapeError("tensor rank must be >= 1");
    for (std::size_t d : s)
        if (d == 0) throw ShapeError("tensor extent must be >= 1, got shape " + shape_str(s));
}

/// Dense row-major N-d array. Training/inference use Tensor<float>; the
/// double instantiation exists for the finite-difference gradient suite.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape_valid(shape_);
        if (shape_numel(shape_) != data_.size())
            throw ShapeError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(const Shape& shape) { return fill(shape, T(0)); }

    static Tensor fill(const Shape& shape, T value) {
        check_shape_valid(shape);
        Tensor t;
        t.shape_ = shape;
        t.data_.assign(shape_numel(shape), value);
        return t;
    }

    static Tensor zeros_like(const Tensor& other) { return zeros(other.shape()); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t numel() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    const std::vector<T>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
Tensor<T> zeros(const Shape& shape) { return Tensor<T>::zeros(shape); }

template <typename T>
Tensor<T> fill(const Shape& shape, T value) { return Tensor<T>::fill(shape, value); }

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b))
        throw ShapeError("elementwise_add shape mismatch: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros_like(a);
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b))
        throw ShapeError("elementwise_mul shape mismatch: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros_like(a);
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
    return out;
}

/// Same data, new shape; element count must be preserved.
template <typename T>
Tensor<T> reshape(const Tensor<T>& t, const Shape& new_shape) {
    check_shape_valid(new_shape);
    if (shape_numel(new_shape) != t.numel())
        throw ShapeError("reshape " + shape_str(t.shape()) + " -> " + shape_str(new_shape) +
                         " changes element count");
    return Tensor<T>(new_shape, t.values());
}

/// Rank-2 transpose.
template <typename T>
Tensor<T> transpose(const Tensor<T>& t) {
    if (t.rank() != 2) throw ShapeError("transpose requires rank 2, got " + shape_str(t.shape()));
    const std::size_t m = t.extent(0), n = t.extent(1);
    Tensor<T> out = Tensor<T>::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[j * m + i] = t[i * n + j];
    return out;
}

namespace detail {

// c[i][j] = sum_k a[i][k] * b[k][j], accumulated in ascending k for every
// element. The 4-row blocking only changes which rows are in flight, not the
// per-element addition order, so the result is bit-identical to the plain
// triple loop and to any worker count.
template <typename T>
void matmul_rows(const T* a, const T* b, T* c,
                 std::size_t i_begin, std::size_t i_end, std::size_t k, std::size_t n) {
    std::size_t i = i_begin;
    for (; i + 4 <= i_end; i += 4) {
        const T* a0 = a + (i + 0) * k;
        const T* a1 = a + (i + 1) * k;
        const T* a2 = a + (i + 2) * k;
        const T* a3 = a + (i + 3) * k;
        T* c0 = c + (i + 0) * n;
        T* c1 = c + (i + 1) * n;
        T* c2 = c + (i + 2) * n;
        T* c3 = c + (i + 3) * n;
        for (std::size_t j = 0; j < n; ++j) { c0[j] = T(0); c1[j] = T(0); c2[j] = T(0); c3[j] = T(0); }
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T* brow = b + kk * n;
            const T x0 = a0[kk], x1 = a1[kk], x2 = a2[kk], x3 = a3[kk];
            for (std::size_t j = 0; j < n; ++j) {
                const T bj = brow[j];
                c0[j] += x0 * bj;
                c1[j] += x1 * bj;
                c2[j] += x2 * bj;
                c3[j] += x3 * bj;
            }
        }
    }
    for (; i < i_end; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T aik = arow[kk];
            const T* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

} // namespace detail

/// Standard [m,k] x [k,n] product.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul requires rank-2 operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    if (b.extent(0) != k)
        throw ShapeError("matmul inner dimensions disagree: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros({m, n});
    // Spread rows across workers once a chunk carries ~256k multiply-adds.
    const std::size_t grain = 1 + (1u << 18) / (k * n + 1);
    parallel_for(m, grain, [&](std::size_t lo, std::size_t hi) {
        detail::matmul_rows(a.data(), b.data(), out.data(), lo, hi, k, n);
    });
    return out;
}

/// a^T * b without materializing the transpose: [k,m]^T x [k,n] -> [m,n].
/// k is the outer loop, so each output element still accumulates in
/// ascending k.
template <typename T>
Tensor<T> matmul_at(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul_at requires rank-2 operands");
    const std::size_t k = a.extent(0), m = a.extent(1), n = b.extent(1);
    if (b.extent(0) != k)
        throw ShapeError("matmul_at inner dimensions disagree: " + shape_str(a.shape()) +
                         "^T x " + shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros({m, n});
    parallel_for(m, 16, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T* arow = a.data() + kk * m;
            const T* brow = b.data() + kk * n;
            for (std::size_t i = lo; i < hi; ++i) {
                const T aki = arow[i];
                T* crow = out.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
            }
        }
    });
    return out;
}

} // namespace glyphforge
