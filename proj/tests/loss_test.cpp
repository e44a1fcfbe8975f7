#include "evseg/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "evseg/gradcheck.hpp"
#include "evseg/rng.hpp"

using namespace evseg;

namespace {

Tensor random_logits(Rng& rng, int h, int w, int k) {
    Tensor t({h, w, k});
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-2.0, 2.0);
    return t;
}

}  // namespace

TEST(SoftmaxXent, TwoClassPixelMatchesClosedForm) {
    Tensor logits({1, 1, 2});
    logits[0] = 0.3;
    logits[1] = -0.2;
    IntImage gt(1, 1, 0);
    Tensor grad;
    const XentResult res = softmax_xent(logits, gt, 255, grad);

    const double p0 = std::exp(0.3) / (std::exp(0.3) + std::exp(-0.2));
    EXPECT_EQ(res.counted, 1);
    EXPECT_NEAR(res.loss, -std::log(p0), 1e-14);
    EXPECT_NEAR(grad[0], p0 - 1.0, 1e-14);
    EXPECT_NEAR(grad[1], 1.0 - p0, 1e-14);
}

TEST(SoftmaxXent, AveragesOverCountedPixels) {
    Tensor logits({1, 2, 2});
    logits.at(0, 0, 0) = 1.0;
    logits.at(0, 0, 1) = -1.0;
    logits.at(0, 1, 0) = 0.5;
    logits.at(0, 1, 1) = 2.0;
    IntImage gt(1, 2);
    gt.at(0, 0) = 0;
    gt.at(0, 1) = 1;
    Tensor grad;
    const XentResult res = softmax_xent(logits, gt, 255, grad);

    auto pixel_loss = [](double a, double b) { return std::log(1.0 + std::exp(b - a)); };
    EXPECT_EQ(res.counted, 2);
    EXPECT_NEAR(res.loss, 0.5 * (pixel_loss(1.0, -1.0) + pixel_loss(2.0, 0.5)), 1e-14);

    const double p = std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0));
    EXPECT_NEAR(grad.at(0, 0, 0), 0.5 * (p - 1.0), 1e-14);
}

TEST(SoftmaxXent, IgnoredPixelsContributeNothing) {
    Rng rng(3);
    Tensor logits = random_logits(rng, 2, 2, 3);
    IntImage gt(2, 2, 255);
    gt.at(1, 1) = 2;
    Tensor grad;
    const XentResult res = softmax_xent(logits, gt, 255, grad);
    EXPECT_EQ(res.counted, 1);

    // Same single pixel alone gives the same loss.
    Tensor one({1, 1, 3});
    for (int c = 0; c < 3; ++c) one[c] = logits.at(1, 1, c);
    IntImage gt_one(1, 1, 2);
    Tensor grad_one;
    EXPECT_DOUBLE_EQ(softmax_xent(one, gt_one, 255, grad_one).loss, res.loss);

    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int c = 0; c < 3; ++c)
                if (y != 1 || x != 1) EXPECT_EQ(grad.at(y, x, c), 0.0);
}

TEST(SoftmaxXent, AllIgnoredGivesZeroLossAndGradient) {
    Rng rng(4);
    Tensor logits = random_logits(rng, 2, 3, 4);
    IntImage gt(2, 3, 255);
    Tensor grad;
    const XentResult res = softmax_xent(logits, gt, 255, grad);
    EXPECT_EQ(res.counted, 0);
    EXPECT_EQ(res.loss, 0.0);
    for (int64_t i = 0; i < grad.size(); ++i) EXPECT_EQ(grad[i], 0.0);
}

TEST(SoftmaxXent, RejectsBadLabelsAndShapes) {
    Tensor logits({2, 2, 3});
    Tensor grad;
    IntImage bad(2, 2, 3);  // label == num classes
    EXPECT_THROW(softmax_xent(logits, bad, 255, grad), DataError);
    IntImage negative(2, 2, -1);
    EXPECT_THROW(softmax_xent(logits, negative, 255, grad), DataError);
    IntImage wrong_size(2, 3, 0);
    EXPECT_THROW(softmax_xent(logits, wrong_size, 255, grad), ShapeError);
    Tensor flat({4, 3});
    IntImage gt(2, 2, 0);
    EXPECT_THROW(softmax_xent(flat, gt, 255, grad), ShapeError);
}

TEST(SoftmaxXent, GradientMatchesFiniteDifferences) {
    Rng rng(7);
    Tensor logits = random_logits(rng, 3, 4, 5);
    IntImage gt(3, 4);
    for (int64_t i = 0; i < gt.size(); ++i)
        gt.v[static_cast<size_t>(i)] = static_cast<int32_t>(rng.uniform_int(5));
    gt.at(1, 2) = 255;  // one ignored pixel in the mix

    Tensor grad;
    softmax_xent(logits, gt, 255, grad);
    auto loss = [&]() {
        Tensor g;
        return softmax_xent(logits, gt, 255, g).loss;
    };
    const GradCheckReport report =
        gradcheck(loss, {{"logits", &logits, &grad}}, 1);
    EXPECT_LT(report.max_rel, 1e-6) << report.worst_item << "[" << report.worst_index << "]";
}

TEST(SoftmaxXent, InvariantToPerPixelLogitShift) {
    Rng rng(9);
    Tensor logits = random_logits(rng, 2, 2, 4);
    IntImage gt(2, 2, 1);
    Tensor grad;
    const double base = softmax_xent(logits, gt, 255, grad).loss;

    Tensor shifted = logits;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            const double c = rng.uniform(-5.0, 5.0);
            for (int k = 0; k < 4; ++k) shifted.at(y, x, k) += c;
        }
    EXPECT_NEAR(softmax_xent(shifted, gt, 255, grad).loss, base, 1e-12);
}

TEST(SoftmaxXent, StableForExtremeLogits) {
    Tensor logits({1, 2, 2});
    logits.at(0, 0, 0) = 1000.0;  // confident and correct
    logits.at(0, 0, 1) = 0.0;
    logits.at(0, 1, 0) = 0.0;  // confident and wrong
    logits.at(0, 1, 1) = 1000.0;
    IntImage gt(1, 2, 0);
    Tensor grad;
    const XentResult res = softmax_xent(logits, gt, 255, grad);
    EXPECT_TRUE(std::isfinite(res.loss));
    EXPECT_NEAR(res.loss, 500.0, 1e-9);  // (0 + 1000) / 2
    for (int64_t i = 0; i < grad.size(); ++i) EXPECT_TRUE(std::isfinite(grad[i]));
}
