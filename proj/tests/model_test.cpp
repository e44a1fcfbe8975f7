#include "evseg/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "evseg/gradcheck.hpp"

using namespace evseg;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.frames = 2;
    cfg.feat_width = 2;
    cfg.image_widths = {2, 2, 2, 2};
    cfg.event_widths = {2, 2, 2, 2};
    return cfg;
}

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = 0.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& wts) {
    double s = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) s += y[i] * wts[i];
    return s;
}

std::vector<GradCheckItem> registry_items(ParamRegistry& reg) {
    std::vector<GradCheckItem> items;
    for (auto& [name, p] : reg.items) items.push_back({name, &p->value, &p->grad});
    return items;
}

int count_with_prefix(const ParamRegistry& reg, const std::string& prefix) {
    int n = 0;
    for (const auto& [name, p] : reg.items) n += name.rfind(prefix, 0) == 0;
    return n;
}

}  // namespace

TEST(ModelConfigTest, RejectsBadConfigs) {
    ModelConfig cfg = tiny_config();
    cfg.frames = 0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.num_classes = 0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.aux_weight = -0.1;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.image_widths[2] = 0;
    EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(SegModelTest, ProducesFullResolutionLogits) {
    Rng rng(1);
    SegModel model;
    model.init(tiny_config(), rng);
    const Tensor frames = random_tensor(rng, {2, 32, 32, 3});
    const Tensor events = random_tensor(rng, {2, 32, 32, 1});
    SegModel::Ctx ctx;
    const Tensor logits = model.forward(frames, events, ctx);
    EXPECT_EQ(logits.shape, (std::vector<int>{32, 32, 2}));
    EXPECT_TRUE(ctx.aux_out.empty());
    for (int64_t i = 0; i < logits.size(); ++i) EXPECT_TRUE(std::isfinite(logits[i]));
}

TEST(SegModelTest, RejectsMismatchedInputs) {
    Rng rng(2);
    SegModel model;
    model.init(tiny_config(), rng);
    SegModel::Ctx ctx;
    const Tensor good_frames = random_tensor(rng, {2, 32, 32, 3});
    const Tensor good_events = random_tensor(rng, {2, 32, 32, 1});
    EXPECT_THROW(model.forward(random_tensor(rng, {3, 32, 32, 3}), good_events, ctx),
                 ShapeError);
    EXPECT_THROW(model.forward(random_tensor(rng, {2, 32, 32, 1}), good_events, ctx),
                 ShapeError);
    EXPECT_THROW(model.forward(good_frames, random_tensor(rng, {2, 32, 32, 3}), ctx),
                 ShapeError);
    EXPECT_THROW(model.forward(good_frames, random_tensor(rng, {2, 64, 32, 1}), ctx),
                 ShapeError);
    // Encoder needs dimensions divisible by 32.
    EXPECT_THROW(model.forward(random_tensor(rng, {2, 16, 16, 3}),
                               random_tensor(rng, {2, 16, 16, 1}), ctx),
                 ShapeError);
}

TEST(SegModelTest, AuxiliaryHeadMatchesMainResolution) {
    Rng rng(3);
    ModelConfig cfg = tiny_config();
    cfg.aux_head = true;
    SegModel model;
    model.init(cfg, rng);
    const Tensor frames = random_tensor(rng, {2, 32, 32, 3});
    const Tensor events = random_tensor(rng, {2, 32, 32, 1});
    SegModel::Ctx ctx;
    const Tensor logits = model.forward(frames, events, ctx);
    EXPECT_EQ(logits.shape, (std::vector<int>{32, 32, 2}));
    EXPECT_EQ(ctx.aux_out.shape, (std::vector<int>{32, 32, 2}));
}

TEST(SegModelTest, RegistryGroupsParametersByComponent) {
    Rng rng(4);
    SegModel model;
    model.init(tiny_config(), rng);
    ParamRegistry reg;
    model.register_params(reg, "net");
    EXPECT_GT(count_with_prefix(reg, "net.image_encoder."), 0);
    EXPECT_GT(count_with_prefix(reg, "net.motion."), 0);
    EXPECT_GT(count_with_prefix(reg, "net.fusion."), 0);
    EXPECT_GT(count_with_prefix(reg, "net.decoder."), 0);
    EXPECT_EQ(count_with_prefix(reg, "net.aux"), 0);
    const int named = count_with_prefix(reg, "net.");
    EXPECT_EQ(named, static_cast<int>(reg.items.size()));

    ModelConfig cfg = tiny_config();
    cfg.aux_head = true;
    SegModel with_aux;
    with_aux.init(cfg, rng);
    ParamRegistry reg2;
    with_aux.register_params(reg2, "net");
    EXPECT_GT(count_with_prefix(reg2, "net.aux."), 0);
}

TEST(SegModelTest, ParamCountSumsTheComponents) {
    Rng rng(5);
    ModelConfig cfg = tiny_config();
    cfg.aux_head = true;
    SegModel model;
    model.init(cfg, rng);

    ParamRegistry enc, mot, fus, dec, auxr;
    model.image_encoder.register_params(enc, "e");
    model.motion.register_params(mot, "m");
    model.fusion.register_params(fus, "f");
    model.decoder.register_params(dec, "d");
    model.aux.register_params(auxr, "a");
    EXPECT_EQ(model.param_count(), enc.total_count() + mot.total_count() + fus.total_count() +
                                       dec.total_count() + auxr.total_count());
}

TEST(SegModelTest, MacsComposeAcrossComponents) {
    Rng rng(6);
    ModelConfig cfg = tiny_config();
    cfg.aux_head = true;
    SegModel model;
    model.init(cfg, rng);

    const int h = 64, w = 32, h4 = 16, w4 = 8;
    const int64_t expect = 2 * model.image_encoder.macs(h, w) + model.motion.macs(2, h, w) +
                           2 * model.fusion.macs(h4, w4) + model.decoder.macs(h4, w4) +
                           model.aux.macs(h4, w4);
    EXPECT_EQ(model.macs(h, w), expect);
    EXPECT_EQ(model.flops(h, w), 2 * expect);
}

TEST(SegModelTest, ForwardIsDeterministic) {
    auto build_and_run = [](Tensor& out) {
        Rng rng(7);
        SegModel model;
        model.init(tiny_config(), rng);
        Rng data(8);
        const Tensor frames = random_tensor(data, {2, 32, 32, 3});
        const Tensor events = random_tensor(data, {2, 32, 32, 1});
        SegModel::Ctx ctx;
        out = model.forward(frames, events, ctx);
    };
    Tensor a, b;
    build_and_run(a);
    build_and_run(b);
    EXPECT_EQ(max_abs_diff(a, b), 0.0);
}

TEST(SegModelTest, RunsUnderEveryFusionArrangement) {
    Rng data(9);
    const Tensor frames = random_tensor(data, {2, 32, 32, 3});
    const Tensor events = random_tensor(data, {2, 32, 32, 1});
    for (FusionArrangement arr :
         {FusionArrangement::no_fusion, FusionArrangement::channel, FusionArrangement::spatial,
          FusionArrangement::spatial_then_channel, FusionArrangement::parallel,
          FusionArrangement::channel_then_spatial}) {
        Rng rng(10);
        ModelConfig cfg = tiny_config();
        cfg.arrangement = arr;
        SegModel model;
        model.init(cfg, rng);
        SegModel::Ctx ctx;
        const Tensor logits = model.forward(frames, events, ctx);
        EXPECT_EQ(logits.shape, (std::vector<int>{32, 32, 2}));
        for (int64_t i = 0; i < logits.size(); ++i) ASSERT_TRUE(std::isfinite(logits[i]));
    }
}

TEST(SegModelTest, GradientsMatchFiniteDifferences) {
    Rng rng(11);
    ModelConfig cfg = tiny_config();
    cfg.aux_head = true;
    SegModel model;
    model.init(cfg, rng);
    ParamRegistry reg;
    model.register_params(reg, "net");
    // Nudge the zero-initialized shifts so no activation sits exactly on the
    // ReLU kink, where finite differences straddle the subgradient.
    for (auto& [name, p] : reg.items)
        for (int64_t i = 0; i < p->value.size(); ++i) p->value[i] += rng.uniform(-0.05, 0.05);

    const Tensor frames = random_tensor(rng, {2, 32, 32, 3});
    const Tensor events = random_tensor(rng, {2, 32, 32, 1});
    const Tensor w_logits = random_tensor(rng, {32, 32, 2}, -1.0, 1.0);
    const Tensor w_aux = random_tensor(rng, {32, 32, 2}, -1.0, 1.0);

    reg.zero_grads();
    SegModel::Ctx ctx;
    const Tensor logits = model.forward(frames, events, ctx);
    model.backward(w_logits, w_aux, ctx);

    auto loss = [&]() {
        SegModel::Ctx c;
        const Tensor y = model.forward(frames, events, c);
        return weighted_sum(y, w_logits) + weighted_sum(c.aux_out, w_aux);
    };
    // Step below the default 1e-5: with thousands of ReLU units in the path a
    // wider stencil occasionally straddles a kink and reports a false miss.
    const GradCheckReport report = gradcheck(loss, registry_items(reg), 61, 1e-6);
    EXPECT_LT(report.max_rel, 1e-4) << report.worst_item << "[" << report.worst_index << "]";
    EXPECT_GT(report.checked, 0);
}
