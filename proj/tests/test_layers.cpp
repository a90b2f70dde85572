#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "glyphforge/gradcheck.hpp"
#include "glyphforge/layers.hpp"
#include "glyphforge/rng.hpp"
#include "support/oracles.hpp"

using namespace glyphforge;

namespace {

Tensor<float> random_tensor(const Shape& shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    auto t = Tensor<float>::zeros(shape);
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

} // namespace

TEST(Conv2D, ShapeContract) {
    Rng rng(1);
    auto conv = Conv2D<float>::he_init(32, 64, rng);
    EXPECT_EQ(conv.output_shape({111, 111, 32}), (Shape{109, 109, 64}));
    EXPECT_THROW(conv.output_shape({2, 5, 32}), ShapeError);
    EXPECT_THROW(conv.output_shape({5, 5, 3}), ShapeError);
}

TEST(Conv2D, AllOnesKernelSumsInput) {
    auto kernels = Tensor<float>::fill({3, 3, 1, 1}, 1.0f);
    Conv2D<float> conv(kernels, Tensor<float>::zeros({1}));
    Rng rng(2);
    auto input = random_tensor({3, 3, 1}, rng);
    auto out = conv.forward(input, Mode::eval);
    ASSERT_EQ(out.shape(), (Shape{1, 1, 1}));
    float sum = 0.0f;
    for (std::size_t i = 0; i < input.numel(); ++i) sum += input[i];
    EXPECT_FLOAT_EQ(out[0], sum);
}

TEST(Conv2D, MatchesNaiveOracle) {
    Rng rng(3);
    auto input = random_tensor({6, 6, 2}, rng);
    auto conv = Conv2D<float>::he_init(2, 3, rng);
    auto got = conv.forward(input, Mode::eval);
    auto want = oracle::conv2d(input, conv.kernels(), conv.bias());
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.numel(); ++i)
        EXPECT_LE(oracle::ulp_distance(got[i], want[i]), 8u) << got[i] << " vs " << want[i];
}

TEST(Conv2D, BackwardZeroGradient) {
    Rng rng(4);
    auto input = random_tensor({5, 5, 2}, rng);
    auto conv = Conv2D<float>::he_init(2, 3, rng);
    conv.forward(input, Mode::train);
    auto gin = conv.backward(Tensor<float>::zeros({3, 3, 3}));
    EXPECT_EQ(gin, Tensor<float>::zeros({5, 5, 2}));
    EXPECT_EQ(*conv.grads()[0], Tensor<float>::zeros({3, 3, 2, 3}));
    EXPECT_EQ(*conv.grads()[1], Tensor<float>::zeros({3}));
}

TEST(Conv2D, SinglePixelGradProjectsInputPatch) {
    Rng rng(5);
    auto input = random_tensor({4, 4, 1}, rng);
    auto conv = Conv2D<float>::he_init(1, 1, rng);
    conv.forward(input, Mode::train);
    // grad_out = 1 at output pixel (1,0): grad_kernels picks out the patch
    // under that pixel.
    auto gout = Tensor<float>::zeros({2, 2, 1});
    gout[2] = 1.0f;  // (y=1, x=0)
    conv.backward(gout);
    const auto& gk = *conv.grads()[0];
    for (std::size_t dy = 0; dy < 3; ++dy)
        for (std::size_t dx = 0; dx < 3; ++dx)
            EXPECT_EQ(gk[dy * 3 + dx], input[(1 + dy) * 4 + dx]) << dy << "," << dx;
}

TEST(Conv2D, BackwardBeforeForwardIsStateError) {
    Rng rng(6);
    auto conv = Conv2D<float>::he_init(1, 1, rng);
    EXPECT_THROW(conv.backward(Tensor<float>::zeros({1, 1, 1})), StateError);
}

TEST(Conv2D, GradientsMatchFiniteDifferences) {
    auto rep = gradcheck::check_conv(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
    EXPECT_LT(rep.max_rel_err, 1e-5);
}

TEST(MaxPool, HandValuesAndShapes) {
    MaxPool2D<float> pool;
    Tensor<float> in({2, 2, 1}, {1, 2, 3, 4});
    auto out = pool.forward(in, Mode::eval);
    ASSERT_EQ(out.shape(), (Shape{1, 1, 1}));
    EXPECT_EQ(out[0], 4.0f);

    EXPECT_EQ(pool.output_shape({109, 109, 64}), (Shape{54, 54, 64}));  // odd row/col dropped
    EXPECT_EQ(pool.output_shape({24, 24, 64}), (Shape{12, 12, 64}));
    EXPECT_THROW(pool.output_shape({1, 4, 2}), ShapeError);
}

TEST(MaxPool, MatchesNaiveOracle) {
    Rng rng(7);
    auto input = random_tensor({7, 9, 3}, rng);
    MaxPool2D<float> pool;
    auto got = pool.forward(input, Mode::eval);
    auto want = oracle::maxpool(input);
    EXPECT_EQ(got, want);
}

TEST(MaxPool, TieRoutesToFirstInScanOrder) {
    MaxPool2D<float> pool;
    Tensor<float> in({2, 2, 1}, {5, 5, 5, 5});
    pool.forward(in, Mode::train);
    Tensor<float> gout({1, 1, 1}, {2.5f});
    auto gin = pool.backward(gout);
    EXPECT_EQ(gin[0], 2.5f);
    EXPECT_EQ(gin[1], 0.0f);
    EXPECT_EQ(gin[2], 0.0f);
    EXPECT_EQ(gin[3], 0.0f);
}

TEST(MaxPool, BackwardAtMostOneCellPerWindow) {
    Rng rng(8);
    auto input = random_tensor({6, 8, 2}, rng);
    MaxPool2D<float> pool;
    pool.forward(input, Mode::train);
    auto gout = random_tensor({3, 4, 2}, rng, 0.5f, 1.0f);
    auto gin = pool.backward(gout);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            for (std::size_t c = 0; c < 2; ++c) {
                int nonzero = 0;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx)
                        if (gin[((2 * y + dy) * 8 + 2 * x + dx) * 2 + c] != 0.0f) ++nonzero;
                EXPECT_LE(nonzero, 1);
            }
}

TEST(MaxPool, GradientRoutingMatchesFiniteDifferences) {
    auto rep = gradcheck::check_maxpool(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
}

TEST(Dense, IdentityWeights) {
    auto w = Tensor<float>::zeros({4, 4});
    for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0f;
    Dense<float> dense(w, Tensor<float>::zeros({4}));
    Rng rng(9);
    auto in = random_tensor({4}, rng);
    EXPECT_EQ(dense.forward(in, Mode::eval), in);
}

TEST(Dense, HiddenLayerShape) {
    Rng rng(10);
    auto dense = Dense<float>::he_init(9216, 64, rng);
    EXPECT_EQ(dense.output_shape({9216}), (Shape{64}));
    EXPECT_THROW(dense.output_shape({9217}), ShapeError);
    auto out = dense.forward(random_tensor({9216}, rng), Mode::eval);
    EXPECT_EQ(out.shape(), (Shape{64}));
}

TEST(Dense, GradientsMatchFiniteDifferences) {
    auto rep = gradcheck::check_dense(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
    EXPECT_LT(rep.max_rel_err, 1e-5);
}

TEST(ReLU, ForwardBackwardCases) {
    ReLU<float> relu;
    Tensor<float> in({3}, {-1, 0, 2});
    auto out = relu.forward(in, Mode::train);
    EXPECT_EQ(out, (Tensor<float>({3}, {0, 0, 2})));
    // Gradient at exactly 0 is defined as 0.
    auto gin = relu.backward(Tensor<float>::fill({3}, 1.0f));
    EXPECT_EQ(gin, (Tensor<float>({3}, {0, 0, 1})));

    auto all_neg = Tensor<float>::fill({5}, -0.3f);
    EXPECT_EQ(relu.forward(all_neg, Mode::train), Tensor<float>::zeros({5}));
    EXPECT_EQ(relu.backward(Tensor<float>::fill({5}, 1.0f)), Tensor<float>::zeros({5}));
}

TEST(ReLU, GradientsMatchFiniteDifferences) {
    auto rep = gradcheck::check_relu(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
}

TEST(Softmax, UniformLogits) {
    auto p = softmax(Tensor<float>::fill({26}, 0.7f));
    for (std::size_t i = 0; i < 26; ++i) EXPECT_EQ(p[i], 1.0f / 26.0f);
}

TEST(Softmax, StableUnderLargeLogits) {
    Tensor<float> z({2}, {1000.0f, 0.0f});
    auto p = softmax(z);
    EXPECT_EQ(p[0], 1.0f);
    EXPECT_EQ(p[1], 0.0f);
}

TEST(Softmax, MatchesWidePrecisionOracle) {
    Rng rng(11);
    for (int round = 0; round < 10; ++round) {
        auto z = random_tensor({26}, rng, -5.0f, 5.0f);
        auto p = softmax(z);
        // Direct 64-bit evaluation.
        double mx = z[0];
        for (std::size_t i = 1; i < 26; ++i) mx = std::max<double>(mx, z[i]);
        double sum = 0.0;
        for (std::size_t i = 0; i < 26; ++i) sum += std::exp(static_cast<double>(z[i]) - mx);
        double psum = 0.0;
        for (std::size_t i = 0; i < 26; ++i) {
            const double want = std::exp(static_cast<double>(z[i]) - mx) / sum;
            EXPECT_NEAR(p[i], want, 1e-6);
            EXPECT_GT(p[i], 0.0f);
            psum += p[i];
        }
        EXPECT_NEAR(psum, 1.0, 1e-6);
    }
}

TEST(Dropout, ZeroRateIsIdentity) {
    Dropout<float> drop(0.0, Rng(1));
    Rng rng(12);
    auto in = random_tensor({20}, rng);
    EXPECT_EQ(drop.forward(in, Mode::train), in);
    EXPECT_EQ(drop.forward(in, Mode::eval), in);
}

TEST(Dropout, EvalModeIsExactIdentity) {
    Dropout<float> drop(0.5, Rng(2));
    Rng rng(13);
    auto in = random_tensor({64}, rng);
    EXPECT_EQ(drop.forward(in, Mode::eval), in);
}

TEST(Dropout, InvalidRateRejected) {
    EXPECT_THROW(Dropout<float>(1.0, Rng(3)), ConfigError);
    EXPECT_THROW(Dropout<float>(1.5, Rng(3)), ConfigError);
}

TEST(Dropout, InvertedScalingPreservesMean) {
    // Monte-Carlo expectation oracle: E[forward(1)] = 1 under inverted dropout.
    Dropout<float> drop(0.5, Rng(4));
    const std::size_t n = 100;
    auto ones = Tensor<float>::fill({n}, 1.0f);
    std::vector<double> sums(n, 0.0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        auto out = drop.forward(ones, Mode::train);
        for (std::size_t i = 0; i < n; ++i) sums[i] += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = sums[i] / trials;
        EXPECT_GE(mean, 0.97);
        EXPECT_LE(mean, 1.03);
    }
}

TEST(Dropout, BackwardAppliesCachedMask) {
    auto rep = gradcheck::check_dropout(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
}

TEST(Stack, ToyForwardAndShapes) {
    Rng rng(14);
    LayerStack<float> stack({16, 16, 1});
    stack.add(std::make_unique<Conv2D<float>>(Conv2D<float>::he_init(1, 4, rng)));
    stack.add(std::make_unique<ReLU<float>>());
    stack.add(std::make_unique<MaxPool2D<float>>());
    stack.add(std::make_unique<Flatten<float>>());
    stack.add(std::make_unique<Dense<float>>(Dense<float>::he_init(7 * 7 * 4, 26, rng)));

    auto chain = stack.shape_chain();
    EXPECT_EQ(chain.front(), (Shape{16, 16, 1}));
    EXPECT_EQ(chain.back(), (Shape{26}));

    auto batch = random_tensor({3, 16, 16, 1}, rng, 0.0f, 1.0f);
    auto logits = stack.forward(batch, Mode::eval);
    EXPECT_EQ(logits.shape(), (Shape{3, 26}));
}

TEST(Stack, IncompatibleLayersRejectedAtBuildTime) {
    Rng rng(15);
    LayerStack<float> stack({4, 4, 1});
    stack.add(std::make_unique<Conv2D<float>>(Conv2D<float>::he_init(1, 2, rng)));
    stack.add(std::make_unique<MaxPool2D<float>>());
    stack.add(std::make_unique<Conv2D<float>>(Conv2D<float>::he_init(2, 2, rng)));  // 1x1 input: underflow
    EXPECT_THROW(stack.shape_chain(), ConfigError);
}

TEST(Stack, EvalBatchMatchesSingleSamples) {
    Rng rng(16);
    LayerStack<float> stack({10, 10, 1});
    stack.add(std::make_unique<Conv2D<float>>(Conv2D<float>::he_init(1, 3, rng)));
    stack.add(std::make_unique<ReLU<float>>());
    stack.add(std::make_unique<MaxPool2D<float>>());
    stack.add(std::make_unique<Flatten<float>>());
    stack.add(std::make_unique<Dense<float>>(Dense<float>::he_init(4 * 4 * 3, 26, rng)));

    auto batch = random_tensor({4, 10, 10, 1}, rng, 0.0f, 1.0f);
    auto batched = stack.forward(batch, Mode::eval);
    for (std::size_t s = 0; s < 4; ++s) {
        auto one = Tensor<float>::zeros({10, 10, 1});
        for (std::size_t i = 0; i < one.numel(); ++i) one[i] = batch[s * one.numel() + i];
        auto single = stack.forward(one, Mode::eval);
        for (std::size_t j = 0; j < 26; ++j)
            EXPECT_EQ(single[j], batched[s * 26 + j]) << "sample " << s << " logit " << j;
    }
}

TEST(Stack, EvalForwardIsDeterministic) {
    Rng rng(17);
    LayerStack<float> stack({8, 8, 1});
    stack.add(std::make_unique<Conv2D<float>>(Conv2D<float>::he_init(1, 2, rng)));
    stack.add(std::make_unique<MaxPool2D<float>>());
    stack.add(std::make_unique<Flatten<float>>());
    stack.add(std::make_unique<Dense<float>>(Dense<float>::he_init(3 * 3 * 2, 5, rng)));
    auto in = random_tensor({2, 8, 8, 1}, rng);
    EXPECT_EQ(stack.forward(in, Mode::eval), stack.forward(in, Mode::eval));
}

TEST(Stack, WholeStackGradientCheck) {
    auto rep = gradcheck::check_stack(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
    EXPECT_LT(rep.max_rel_err, 1e-4);
}

TEST(HeUniform, BoundsAndDeterminism) {
    Rng a(21), b(21);
    auto w1 = he_uniform<float>({3, 3, 4, 8}, 36, a);
    auto w2 = he_uniform<float>({3, 3, 4, 8}, 36, b);
    EXPECT_EQ(w1, w2);
    const float limit = std::sqrt(6.0f / 36.0f);
    for (std::size_t i = 0; i < w1.numel(); ++i) {
        EXPECT_GT(w1[i], -limit);
        EXPECT_LT(w1[i], limit);
    }
}
