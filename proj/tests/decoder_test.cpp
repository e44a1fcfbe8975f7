#include "evseg/decoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "evseg/gradcheck.hpp"

using namespace evseg;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& wts) {
    double s = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) s += y[i] * wts[i];
    return s;
}

}  // namespace

TEST(TemporalDecoder, UpsamplesQuarterScaleFeaturesToLogits) {
    Rng rng(81);
    TemporalDecoder dec;
    dec.init(3, 4, 5, rng);
    Tensor features = random_tensor(rng, {3, 8, 6, 4});
    TemporalDecoder::Ctx ctx;
    Tensor logits = dec.forward(features, ctx);
    EXPECT_EQ(logits.shape, (std::vector<int>{32, 24, 5}));
}

TEST(TemporalDecoder, RejectsMismatchedStack) {
    Rng rng(82);
    TemporalDecoder dec;
    dec.init(3, 4, 5, rng);
    Tensor wrong_frames({2, 8, 8, 4});
    Tensor wrong_width({3, 8, 8, 3});
    TemporalDecoder::Ctx ctx;
    EXPECT_THROW(dec.forward(wrong_frames, ctx), ShapeError);
    EXPECT_THROW(dec.forward(wrong_width, ctx), ShapeError);
}

TEST(TemporalDecoder, AttentionWeightsSumToOnePerPixel) {
    Rng rng(83);
    TemporalDecoder dec;
    dec.init(3, 4, 2, rng);
    Tensor features = random_tensor(rng, {3, 5, 5, 4});
    TemporalDecoder::Ctx ctx;
    (void)dec.forward(features, ctx);
    for (const Tensor* attn : {&ctx.b1.at.attn, &ctx.b2.at.attn}) {
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                double s = 0.0;
                for (int ci = 0; ci < attn->dim(2); ++ci) s += attn->at(y, x, ci);
                ASSERT_NEAR(s, 1.0, 1e-12);
            }
    }
}

TEST(TemporalDecoder, SingleFrameStackWorks) {
    Rng rng(84);
    TemporalDecoder dec;
    dec.init(1, 3, 4, rng);
    Tensor features = random_tensor(rng, {1, 4, 4, 3});
    TemporalDecoder::Ctx ctx;
    Tensor logits = dec.forward(features, ctx);
    EXPECT_EQ(logits.shape, (std::vector<int>{16, 16, 4}));
}

TEST(TemporalDecoder, BlocksLeaveReferenceFramesUntouched) {
    Rng rng(85);
    TemporalDecoder dec;
    dec.init(3, 4, 2, rng);
    Tensor x = random_tensor(rng, {3, 4, 4, 4});
    TemporalDecoder::Block::Ctx ctx;
    Tensor y = dec.blocks[0].forward(x, ctx);
    for (int t = 1; t < 3; ++t)
        EXPECT_EQ(max_abs_diff(slice_frame(y, t), slice_frame(x, t)), 0.0) << "frame " << t;
    EXPECT_GT(max_abs_diff(slice_frame(y, 0), slice_frame(x, 0)), 0.0);
}

TEST(TemporalDecoder, ReorderingReferenceFramesWithTheirEmbeddingsChangesNothing) {
    Rng rng(86);
    TemporalDecoder dec;
    dec.init(4, 3, 2, rng);
    Tensor features = random_tensor(rng, {4, 5, 4, 3});
    TemporalDecoder::Ctx ctx;
    const Tensor base = dec.forward(features, ctx);

    // Rotate reference frames 1,2,3 -> 2,3,1 together with their embedding rows.
    const int perm[4] = {0, 2, 3, 1};
    Tensor shuffled(features.shape);
    Tensor embed_shuffled(dec.embed.value.shape);
    for (int t = 0; t < 4; ++t) {
        const Tensor frame = slice_frame(features, perm[t]);
        std::copy(frame.v.begin(), frame.v.end(), shuffled.v.begin() + t * frame.size());
        for (int c = 0; c < 3; ++c) embed_shuffled.at(t, c) = dec.embed.value.at(perm[t], c);
    }
    dec.embed.value = embed_shuffled;

    TemporalDecoder::Ctx ctx2;
    const Tensor rotated = dec.forward(shuffled, ctx2);
    EXPECT_LT(max_abs_diff(base, rotated), 1e-12);
}

TEST(TemporalDecoder, GradientsMatchFiniteDifferences) {
    Rng rng(87);
    TemporalDecoder dec;
    dec.init(2, 2, 2, rng);
    Tensor features = random_tensor(rng, {2, 3, 3, 2});
    Tensor wts = random_tensor(rng, {12, 12, 2});

    TemporalDecoder::Ctx ctx;
    (void)dec.forward(features, ctx);
    Tensor g_features = dec.backward(wts, ctx);

    ParamRegistry reg;
    dec.register_params(reg, "d");
    std::vector<GradCheckItem> items;
    for (auto& [name, p] : reg.items) items.push_back({name, &p->value, &p->grad});
    items.push_back({"features", &features, &g_features});

    auto loss = [&] {
        TemporalDecoder::Ctx c;
        return weighted_sum(dec.forward(features, c), wts);
    };
    GradCheckReport report = gradcheck(loss, items, 1);
    EXPECT_LT(report.max_rel, 1e-4) << report.worst_item << "[" << report.worst_index << "]";
}

TEST(TemporalDecoder, RegistryNamesAndCounts) {
    Rng rng(88);
    TemporalDecoder dec;
    dec.init(2, 3, 2, rng);
    ParamRegistry reg;
    dec.register_params(reg, "d");
    EXPECT_EQ(reg.items[0].first, "d.embed");
    EXPECT_EQ(reg.items[1].first, "d.block1.wq.w");
    EXPECT_EQ(reg.items.back().first, "d.head.b");
    // Embedding 2x3; eight 1x1 projections at width 3; head 3 -> 2.
    EXPECT_EQ(reg.total_count(), 2 * 3 + 8 * (3 * 3 + 3) + (3 * 2 + 2));
}

TEST(TemporalDecoder, MacsCountProjectionAndAttentionWork) {
    Rng rng(89);
    TemporalDecoder dec;
    dec.init(2, 3, 2, rng);
    // Per block at 4x4: query and output projections once, keys and values
    // per frame, then dot products and value sums over the valid window
    // slots of every pixel (border pixels lose out-of-bounds offsets).
    const int64_t proj = 4 * 4 * (3 * 3);
    const int64_t slots = (3 * 4 - 2) * (3 * 4 - 2) * 2;
    const int64_t block = 2 * proj + 2 * 2 * proj + 2 * slots * 3;
    const int64_t head = 4 * 4 * (3 * 2);
    EXPECT_EQ(dec.macs(4, 4), 2 * block + head);
}

TEST(PredictMask, TakesArgmaxWithLowestIndexOnTies) {
    Tensor logits({2, 2, 3});
    // (0,0): clear winner class 2; (0,1): tie between 0 and 1 -> 0;
    // (1,0): tie between 1 and 2 -> 1; (1,1): all equal -> 0.
    logits.at(0, 0, 0) = 0.1; logits.at(0, 0, 1) = 0.2; logits.at(0, 0, 2) = 0.9;
    logits.at(0, 1, 0) = 0.7; logits.at(0, 1, 1) = 0.7; logits.at(0, 1, 2) = 0.1;
    logits.at(1, 0, 0) = -1.0; logits.at(1, 0, 1) = 0.4; logits.at(1, 0, 2) = 0.4;
    logits.at(1, 1, 0) = 0.0; logits.at(1, 1, 1) = 0.0; logits.at(1, 1, 2) = 0.0;
    IntImage mask = predict_mask(logits);
    EXPECT_EQ(mask.at(0, 0), 2);
    EXPECT_EQ(mask.at(0, 1), 0);
    EXPECT_EQ(mask.at(1, 0), 1);
    EXPECT_EQ(mask.at(1, 1), 0);
}

TEST(PredictMask, RejectsNonFiniteLogits) {
    Tensor logits({1, 1, 2});
    logits.at(0, 0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(predict_mask(logits), NumericError);
    logits.at(0, 0, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(predict_mask(logits), NumericError);
}
