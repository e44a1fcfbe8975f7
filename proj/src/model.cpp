#include "evseg/model.hpp"

#include <algorithm>

namespace evseg {

void validate(const ModelConfig& cfg) {
    check_config(cfg.num_classes >= 1, "model: at least one class required");
    check_config(cfg.frames >= 1, "model: at least one frame required");
    check_config(cfg.feat_width >= 1, "model: feature width must be positive");
    for (int wdt : cfg.image_widths)
        check_config(wdt >= 1, "model: image stage widths must be positive");
    for (int wdt : cfg.event_widths)
        check_config(wdt >= 1, "model: event stage widths must be positive");
    check_config(cfg.aux_weight >= 0.0, "model: auxiliary weight must be non-negative");
}

void SegModel::init(const ModelConfig& cfg_, Rng& rng) {
    validate(cfg_);
    cfg = cfg_;
    image_encoder.init(3, cfg.image_widths, cfg.feat_width, rng);
    motion.init(1, cfg.event_widths, cfg.feat_width, rng);
    motion.pool_mode = cfg.pool_mode;
    fusion.init(cfg.feat_width, rng);
    fusion.arrangement = cfg.arrangement;
    decoder.init(cfg.frames, cfg.feat_width, cfg.num_classes, rng);
    if (cfg.aux_head) aux.init(1, 1, cfg.feat_width, cfg.num_classes, true, 1, 1, rng);
}

Tensor SegModel::forward(const Tensor& frames, const Tensor& events, Ctx& ctx) const {
    check_shape(frames.rank() == 4 && frames.dim(0) == cfg.frames && frames.dim(3) == 3,
                "model: (T,H,W,3) frame stack required, got " + frames.shape_str());
    check_shape(events.rank() == 4 && events.dim(0) == cfg.frames &&
                    events.dim(1) == frames.dim(1) && events.dim(2) == frames.dim(2) &&
                    events.dim(3) == 1,
                "model: (T,H,W,1) event stack required, got " + events.shape_str());
    const int t = cfg.frames;
    ctx.h = frames.dim(1);
    ctx.w = frames.dim(2);
    ctx.image.resize(static_cast<size_t>(t));
    ctx.fusion.resize(static_cast<size_t>(t));

    const Tensor f_m = motion.forward(events, ctx.motion);
    for (int ti = 0; ti < t; ++ti) {
        const Tensor f_i = image_encoder.forward(slice_frame(frames, ti),
                                                 ctx.image[static_cast<size_t>(ti)]);
        const Tensor fused = fusion.forward(f_i, slice_frame(f_m, ti),
                                            ctx.fusion[static_cast<size_t>(ti)]);
        if (ti == 0) ctx.fused = Tensor({t, fused.dim(0), fused.dim(1), fused.dim(2)});
        std::copy(fused.v.begin(), fused.v.end(), ctx.fused.v.begin() + ti * fused.size());
    }

    if (cfg.aux_head) {
        const Tensor aux4 = aux.forward(slice_frame(ctx.fused, 0), ctx.aux_c);
        ctx.aux_out = kernels::upsample_bilinear(aux4, 4);
    }
    return decoder.forward(ctx.fused, ctx.dec);
}

void SegModel::backward(const Tensor& g_logits, const Tensor& g_aux, const Ctx& ctx) {
    Tensor g_fused = decoder.backward(g_logits, ctx.dec);
    if (cfg.aux_head && !g_aux.empty()) {
        const Tensor g4 =
            kernels::upsample_bilinear_backward(g_aux, 4, ctx.h / 4, ctx.w / 4);
        const Tensor g0 = aux.backward(g4, ctx.aux_c);
        for (int64_t i = 0; i < g0.size(); ++i) g_fused[i] += g0[i];
    }

    const int t = cfg.frames;
    Tensor g_f_m;
    for (int ti = 0; ti < t; ++ti) {
        auto [g_fi, g_fm] =
            fusion.backward(slice_frame(g_fused, ti), ctx.fusion[static_cast<size_t>(ti)]);
        (void)image_encoder.backward(g_fi, ctx.image[static_cast<size_t>(ti)]);
        if (ti == 0) g_f_m = Tensor({t, g_fm.dim(0), g_fm.dim(1), g_fm.dim(2)});
        std::copy(g_fm.v.begin(), g_fm.v.end(), g_f_m.v.begin() + ti * g_fm.size());
    }
    (void)motion.backward(g_f_m, ctx.motion);
}

void SegModel::register_params(ParamRegistry& reg, const std::string& prefix) {
    image_encoder.register_params(reg, prefix + ".image_encoder");
    motion.register_params(reg, prefix + ".motion");
    fusion.register_params(reg, prefix + ".fusion");
    decoder.register_params(reg, prefix + ".decoder");
    if (cfg.aux_head) aux.register_params(reg, prefix + ".aux");
}

int64_t SegModel::macs(int h, int w) const {
    const int t = cfg.frames, h4 = h / 4, w4 = w / 4;
    int64_t total = static_cast<int64_t>(t) * image_encoder.macs(h, w);
    total += motion.macs(t, h, w);
    total += static_cast<int64_t>(t) * fusion.macs(h4, w4);
    total += decoder.macs(h4, w4);
    if (cfg.aux_head) total += aux.macs(h4, w4);
    return total;
}

int64_t SegModel::param_count() {
    ParamRegistry reg;
    register_params(reg, "model");
    return reg.total_count();
}

}  // namespace evseg
