#include <gtest/gtest.h>

#include <cmath>

#include "glyphforge/gradcheck.hpp"
#include "glyphforge/optim.hpp"
#include "glyphforge/rng.hpp"

using namespace glyphforge;

TEST(CrossEntropy, ConfidentCorrectPredictionIsZeroLoss) {
    auto z = Tensor<float>::zeros({1, 26});
    z[0] = 100.0f;  // p[0] == 1 up to underflow
    auto lv = softmax_cross_entropy(z, {0});
    EXPECT_EQ(lv.loss, 0.0f);
}

TEST(CrossEntropy, UniformLogitsGiveLn26) {
    auto z = Tensor<float>::fill({4, 26}, 0.25f);
    auto lv = softmax_cross_entropy(z, {0, 5, 13, 25});
    EXPECT_NEAR(lv.loss, std::log(26.0), 1e-6);
}

TEST(CrossEntropy, LossIsNonNegative) {
    Rng rng(3);
    for (int round = 0; round < 20; ++round) {
        auto z = Tensor<float>::zeros({2, 26});
        for (std::size_t i = 0; i < z.numel(); ++i) z[i] = static_cast<float>(rng.uniform(-4, 4));
        auto lv = softmax_cross_entropy(z, {static_cast<int>(rng.uniform_index(26)),
                                            static_cast<int>(rng.uniform_index(26))});
        EXPECT_GE(lv.loss, 0.0f);
    }
}

TEST(CrossEntropy, LabelOutOfRangeRejected) {
    auto z = Tensor<float>::zeros({1, 26});
    EXPECT_THROW(softmax_cross_entropy(z, {26}), DataError);
    EXPECT_THROW(softmax_cross_entropy(z, {-1}), DataError);
    EXPECT_THROW(softmax_cross_entropy(z, {0, 1}), DataError);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
    auto rep = gradcheck::check_softmax_xent(42);
    EXPECT_TRUE(rep.pass) << "max rel err " << rep.max_rel_err;
    EXPECT_LT(rep.max_rel_err, 1e-5);
}

TEST(CrossEntropy, FusedGradientEqualsComposedPath) {
    // Composed route: p = softmax(z); dL/dz_j = (p_j - [j==y]) / b follows from
    // hand-chaining d(-ln p_y)/dz through the softmax Jacobian. Evaluate both.
    Rng rng(4);
    auto z = Tensor<double>::zeros({3, 26});
    for (std::size_t i = 0; i < z.numel(); ++i) z[i] = rng.uniform(-3, 3);
    std::vector<int> labels{1, 24, 7};
    auto fused = softmax_cross_entropy(z, labels);
    auto p = softmax(z);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < 26; ++j) {
            const double composed = (p[r * 26 + j] - (static_cast<int>(j) == labels[r] ? 1.0 : 0.0)) / 3.0;
            EXPECT_NEAR(fused.grad[r * 26 + j], composed, 1e-6);
        }
}

TEST(Adam, ZeroGradientIsFixedPoint) {
    auto theta = Tensor<float>::fill({5}, 0.75f);
    auto grad = Tensor<float>::zeros({5});
    std::vector<Tensor<float>*> params{&theta}, grads{&grad};
    AdamState<float> adam(params);
    auto before = theta;
    for (int i = 0; i < 10; ++i) adam.step(params, grads);
    EXPECT_EQ(theta, before);
    EXPECT_EQ(adam.first_moment(0), Tensor<float>::zeros({5}));
    EXPECT_EQ(adam.second_moment(0), Tensor<float>::zeros({5}));
}

TEST(Adam, SingleStepHandValue) {
    // t=1, theta=0, g=1: m-hat=1, v-hat=1, theta = -lr / (1 + eps).
    auto theta = Tensor<double>::zeros({1});
    auto grad = Tensor<double>::fill({1}, 1.0);
    std::vector<Tensor<double>*> params{&theta}, grads{&grad};
    AdamState<double> adam(params);
    adam.step(params, grads);
    EXPECT_NEAR(theta[0], -0.001 * (1.0 / (1.0 + 1e-8)), 1e-15);
    EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, DescendsQuadratic) {
    // 100 steps on f(theta) = theta^2 from theta=1 with lr=0.1.
    auto theta = Tensor<float>::fill({1}, 1.0f);
    auto grad = Tensor<float>::zeros({1});
    std::vector<Tensor<float>*> params{&theta}, grads{&grad};
    AdamHyper hp;
    hp.lr = 0.1;
    AdamState<float> adam(params, hp);
    for (int i = 0; i < 100; ++i) {
        grad[0] = 2.0f * theta[0];
        adam.step(params, grads);
    }
    EXPECT_LT(std::fabs(theta[0]), 0.1f);
}

TEST(Adam, NanGradientAbortsWithoutTouchingState) {
    auto theta = Tensor<float>::fill({2}, 0.5f);
    auto grad = Tensor<float>::fill({2}, 1.0f);
    std::vector<Tensor<float>*> params{&theta}, grads{&grad};
    AdamState<float> adam(params);
    adam.step(params, grads);
    auto saved = theta;
    grad[1] = std::nanf("");
    EXPECT_THROW(adam.step(params, grads), NumericError);
    EXPECT_EQ(theta, saved);
    EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, Deterministic) {
    auto run = [] {
        auto theta = Tensor<float>::fill({3}, 0.2f);
        auto grad = Tensor<float>::zeros({3});
        std::vector<Tensor<float>*> params{&theta}, grads{&grad};
        AdamState<float> adam(params);
        for (int i = 0; i < 25; ++i) {
            for (std::size_t j = 0; j < 3; ++j) grad[j] = theta[j] * 0.7f + 0.01f * j;
            adam.step(params, grads);
        }
        return theta;
    };
    EXPECT_EQ(run(), run());
}
