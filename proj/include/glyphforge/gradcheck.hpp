#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "glyphforge/layers.hpp"
#include "glyphforge/optim.hpp"
#include "glyphforge/rng.hpp"
#include "glyphforge/tensor.hpp"

namespace glyphforge {
namespace gradcheck {

struct LayerReport {
    std::string layer;
    double max_rel_err = 0.0;
    std::size_t worst_tensor = 0;
    std::size_t worst_index = 0;
    double threshold = 0.0;
    bool pass = false;
};

namespace detail {

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    auto t = Tensor<double>::zeros(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Central finite differences against analytic gradients for an arbitrary
/// scalar objective. Perturbs each theta element by eps_scale*max(1,|x|),
/// re-evaluating the objective with the mutated value in place.
inline LayerReport compare(std::string name, double threshold,
                           const std::vector<Tensor<double>*>& thetas,
                           const std::vector<Tensor<double>>& analytic,
                           const std::function<double()>& objective,
                           double eps_scale = 1e-3, double denom_floor = 1e-6) {
    LayerReport rep;
    rep.layer = std::move(name);
    rep.threshold = threshold;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        Tensor<double>& theta = *thetas[t];
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            const double saved = theta[i];
            const double eps = eps_scale * std::max(1.0, std::fabs(saved));
            theta[i] = saved + eps;
            const double j_plus = objective();
            theta[i] = saved - eps;
            const double j_minus = objective();
            theta[i] = saved;
            const double numeric = (j_plus - j_minus) / (2.0 * eps);
            const double a = analytic[t][i];
            const double denom = std::max(std::fabs(a), std::fabs(numeric));
            // Below the floor the comparison degrades to a scaled absolute
            // check; central-difference noise swamps true relative error there.
            const double err = denom < denom_floor ? std::fabs(a - numeric) / denom_floor
                                                   : std::fabs(a - numeric) / denom;
            if (err > rep.max_rel_err) {
                rep.max_rel_err = err;
                rep.worst_tensor = t;
                rep.worst_index = i;
            }
        }
    }
    rep.pass = rep.max_rel_err < threshold;
    return rep;
}

// Projection objective J = sum(out .* r): its gradient w.r.t. out is r, so
// backward(r) yields exactly dJ/dtheta.
inline double project(const Tensor<double>& out, const Tensor<double>& r) {
    double j = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) j += out[i] * r[i];
    return j;
}

} // namespace detail

inline LayerReport check_conv(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 1);
    auto input = detail::random_tensor({2, 6, 6, 2}, rng);
    auto conv = Conv2D<double>::he_init(2, 3, rng);
    auto probe = detail::random_tensor({2, 4, 4, 3}, rng);

    conv.forward(input, Mode::train);
    auto grad_input = conv.backward(probe);
    std::vector<Tensor<double>> analytic{*conv.grads()[0], *conv.grads()[1], grad_input};
    std::vector<Tensor<double>*> thetas{conv.params()[0], conv.params()[1], &input};
    return detail::compare("conv", 1e-5, thetas, analytic, [&] {
        return detail::project(conv.forward(input, Mode::eval), probe);
    });
}

inline LayerReport check_dense(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 2);
    auto input = detail::random_tensor({2, 7}, rng);
    auto dense = Dense<double>::he_init(7, 5, rng);
    auto probe = detail::random_tensor({2, 5}, rng);

    dense.forward(input, Mode::train);
    auto grad_input = dense.backward(probe);
    std::vector<Tensor<double>> analytic{*dense.grads()[0], *dense.grads()[1], grad_input};
    std::vector<Tensor<double>*> thetas{dense.params()[0], dense.params()[1], &input};
    return detail::compare("dense", 1e-5, thetas, analytic, [&] {
        return detail::project(dense.forward(input, Mode::eval), probe);
    });
}

inline LayerReport check_relu(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 3);
    // Inputs kept away from the kink at 0: |x| > 1e-2 >> the 1e-3 step.
    auto input = Tensor<double>::zeros({40});
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        input[i] = sign * rng.uniform(0.011, 1.0);
    }
    ReLU<double> relu;
    auto probe = detail::random_tensor({40}, rng);

    relu.forward(input, Mode::train);
    auto grad_input = relu.backward(probe);
    std::vector<Tensor<double>> analytic{grad_input};
    std::vector<Tensor<double>*> thetas{&input};
    return detail::compare("relu", 1e-5, thetas, analytic, [&] {
        return detail::project(relu.forward(input, Mode::eval), probe);
    });
}

inline LayerReport check_maxpool(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 4);
    // Well-separated values so the 1e-3 steps cannot flip an argmax.
    auto input = Tensor<double>::zeros({1, 6, 6, 2});
    std::vector<std::size_t> order(input.numel());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i)
        input[i] = static_cast<double>(order[i]) / static_cast<double>(order.size());
    MaxPool2D<double> pool;
    auto probe = detail::random_tensor({1, 3, 3, 2}, rng);

    pool.forward(input, Mode::train);
    auto grad_input = pool.backward(probe);
    std::vector<Tensor<double>> analytic{grad_input};
    std::vector<Tensor<double>*> thetas{&input};
    return detail::compare("maxpool", 1e-5, thetas, analytic, [&] {
        return detail::project(pool.forward(input, Mode::eval), probe);
    });
}

inline LayerReport check_softmax_xent(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 5);
    auto logits = detail::random_tensor({3, 26}, rng, -2.0, 2.0);
    std::vector<int> labels;
    for (int r = 0; r < 3; ++r) labels.push_back(static_cast<int>(rng.uniform_index(26)));

    auto loss = softmax_cross_entropy(logits, labels);
    std::vector<Tensor<double>> analytic{loss.grad};
    std::vector<Tensor<double>*> thetas{&logits};
    return detail::compare("softmax", 1e-5, thetas, analytic, [&] {
        return softmax_cross_entropy(logits, labels).loss;
    });
}

inline LayerReport check_dropout(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 6);
    auto input = detail::random_tensor({30}, rng);
    Dropout<double> drop(0.35, Rng::derive(seed, 60));
    auto probe = detail::random_tensor({30}, rng);

    // Freeze the mask by rewinding the stream before every forward.
    auto frozen_forward = [&]() {
        drop.reseed(seed, 61);
        return drop.forward(input, Mode::train);
    };
    frozen_forward();
    auto grad_input = drop.backward(probe);
    std::vector<Tensor<double>> analytic{grad_input};
    std::vector<Tensor<double>*> thetas{&input};
    return detail::compare("dropout", 1e-5, thetas, analytic, [&] {
        return detail::project(frozen_forward(), probe);
    });
}

namespace detail {

// Distance of the stack's nonlinearities from their nonsmooth points: the
// smallest |relu preactivation| and half the smallest top-two gap inside any
// pooling window. Finite differencing is only valid when the perturbations
// cannot flip one of these.
template <typename T>
double smoothness_margin(LayerStack<T>& stack, const Tensor<T>& input) {
    double margin = 1e30;
    Tensor<T> cur = input;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        Layer<T>& l = stack.layer(i);
        if (l.name() == "relu") {
            for (std::size_t j = 0; j < cur.numel(); ++j)
                margin = std::min(margin, static_cast<double>(std::fabs(cur[j])));
        } else if (l.name() == "maxpool") {
            // Pool inputs here are relu outputs. Windows whose max is exactly
            // 0 are all dead units, locally constant, and cannot flip.
            const std::size_t b = cur.extent(0), h = cur.extent(1), w = cur.extent(2), c = cur.extent(3);
            for (std::size_t s = 0; s < b; ++s)
                for (std::size_t y = 0; y + 1 < h; y += 2)
                    for (std::size_t x = 0; x + 1 < w; x += 2)
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            double top = -1e30, second = -1e30;
                            for (std::size_t dy = 0; dy < 2; ++dy)
                                for (std::size_t dx = 0; dx < 2; ++dx) {
                                    const double v = cur[((s * h + y + dy) * w + x + dx) * c + ch];
                                    if (v > top) { second = top; top = v; }
                                    else if (v > second) second = v;
                                }
                            if (top == 0.0) continue;
                            margin = std::min(margin, (top - second) / 2.0);
                        }
        }
        cur = l.forward(cur, Mode::eval);
    }
    return margin;
}

} // namespace detail

/// Two conv/pool blocks on a 16x16x1 toy input feeding dense layers, checked
/// end to end through the fused loss. Candidate instances are scanned until
/// every relu/pool decision sits safely away from the finite-difference
/// steps, so the objective is smooth over all perturbations.
inline LayerReport check_stack(std::uint64_t seed) {
    constexpr double kEps = 1e-6;
    LayerStack<double> stack;
    Tensor<double> input;
    std::vector<int> labels;
    for (std::uint64_t candidate = 0; candidate < 64; ++candidate) {
        Rng rng = Rng::derive(seed, 7 + 1000 * candidate);
        LayerStack<double> s({16, 16, 1});
        s.add(std::make_unique<Conv2D<double>>(Conv2D<double>::he_init(1, 4, rng)));
        s.add(std::make_unique<ReLU<double>>());
        s.add(std::make_unique<MaxPool2D<double>>());
        s.add(std::make_unique<Conv2D<double>>(Conv2D<double>::he_init(4, 8, rng)));
        s.add(std::make_unique<ReLU<double>>());
        s.add(std::make_unique<MaxPool2D<double>>());
        s.add(std::make_unique<Flatten<double>>());
        s.add(std::make_unique<Dense<double>>(Dense<double>::he_init(32, 16, rng)));
        s.add(std::make_unique<ReLU<double>>());
        s.add(std::make_unique<Dense<double>>(Dense<double>::he_init(16, 26, rng)));
        auto in = detail::random_tensor({2, 16, 16, 1}, rng, 0.0, 1.0);
        // Perturbation influence on any preactivation is bounded by roughly
        // 30x the step in this stack; require twice that.
        if (detail::smoothness_margin(s, in) > 60.0 * kEps) {
            stack = std::move(s);
            input = std::move(in);
            labels = {static_cast<int>(rng.uniform_index(26)),
                      static_cast<int>(rng.uniform_index(26))};
            break;
        }
    }
    if (stack.size() == 0)
        throw NumericError("no smooth toy-stack instance found for gradient check");

    auto loss = softmax_cross_entropy(stack.forward(input, Mode::train), labels);
    stack.backward(loss.grad);
    std::vector<Tensor<double>> analytic;
    for (auto* g : stack.grads()) analytic.push_back(*g);
    std::vector<Tensor<double>*> thetas = stack.params();
    return detail::compare("stack", 1e-4, thetas, analytic, [&] {
        return softmax_cross_entropy(stack.forward(input, Mode::eval), labels).loss;
    }, kEps, 1e-3);
}

/// Runs every registered check, or just the ones whose name matches filter.
inline std::vector<LayerReport> run(std::uint64_t seed, const std::string& filter = "") {
    const std::vector<std::pair<std::string, LayerReport (*)(std::uint64_t)>> all{
        {"conv", &check_conv},       {"dense", &check_dense},
        {"relu", &check_relu},       {"maxpool", &check_maxpool},
        {"softmax", &check_softmax_xent}, {"dropout", &check_dropout},
        {"stack", &check_stack},
    };
    std::vector<LayerReport> out;
    for (const auto& [name, fn] : all)
        if (filter.empty() || filter == name) out.push_back(fn(seed));
    if (out.empty())
        throw ConfigError("unknown gradcheck layer '" + filter +
                          "' (expected conv|dense|relu|maxpool|softmax|dropout|stack)");
    return out;
}

} // namespace gradcheck
} // namespace glyphforge
