#include "evseg/motion.hpp"

#include <algorithm>

namespace evseg {

PoolMode parse_pool_mode(const std::string& name) {
    if (name == "temporal") return PoolMode::temporal;
    if (name == "global_broadcast") return PoolMode::global_broadcast;
    throw ConfigError("unknown pool mode '" + name + "'");
}

std::string pool_mode_name(PoolMode m) {
    return m == PoolMode::temporal ? "temporal" : "global_broadcast";
}

void MotionExtraction::init(int in_ch, const std::array<int, 4>& widths, int feat_width,
                            Rng& rng) {
    event_encoder.init(in_ch, widths, feat_width, rng);
    tau1.init(1, 1, 1, feat_width, feat_width, true, rng);
    f1.init(2, 3, 3, feat_width, feat_width, true, rng);
    tau2.init(1, 1, 1, feat_width, feat_width, true, rng);
    f2.init(1, 3, 3, feat_width, feat_width, true, rng);
    tau3.init(1, 1, 1, feat_width, feat_width, true, rng);
    tau4.init(1, 1, 1, 2 * feat_width, feat_width, true, rng);
}

Tensor MotionExtraction::encode_events(const Tensor& event_frames, EncodeCtx& ctx) const {
    check_shape(event_frames.rank() == 4, "encode_events: (T,H,W,1) input required");
    const int t = event_frames.dim(0);
    ctx.frames.resize(static_cast<size_t>(t));
    Tensor out;
    for (int ti = 0; ti < t; ++ti) {
        const Tensor frame = slice_frame(event_frames, ti);
        const Tensor feat = event_encoder.forward(frame, ctx.frames[static_cast<size_t>(ti)]);
        if (ti == 0) out = Tensor({t, feat.dim(0), feat.dim(1), feat.dim(2)});
        std::copy(feat.v.begin(), feat.v.end(), out.v.begin() + ti * feat.size());
    }
    return out;
}

Tensor MotionExtraction::encode_events_backward(const Tensor& gy, const EncodeCtx& ctx) {
    const int t = gy.dim(0);
    Tensor gx;
    for (int ti = 0; ti < t; ++ti) {
        const Tensor g_frame = slice_frame(gy, ti);
        const Tensor g_in =
            event_encoder.backward(g_frame, ctx.frames[static_cast<size_t>(ti)]);
        if (ti == 0) gx = Tensor({t, g_in.dim(0), g_in.dim(1), g_in.dim(2)});
        std::copy(g_in.v.begin(), g_in.v.end(), gx.v.begin() + ti * g_in.size());
    }
    return gx;
}

Tensor MotionExtraction::temporal_conv_block(const Tensor& f_e, BlockCtx& ctx) const {
    check_shape(f_e.rank() == 4, "temporal_conv_block: (T,H,W,C) input required");
    check_shape(f_e.dim(0) >= 2, "temporal_conv_block: at least 2 frames required");
    Tensor h = tau1.forward(f_e, ctx.t1);
    h = f1.forward(h, ctx.c1);
    h = tau2.forward(h, ctx.t2);
    h = f2.forward(h, ctx.c2);
    h.add_(f_e);
    ctx.pooled_in = h;
    Tensor pooled = pool_mode == PoolMode::temporal ? kernels::temporal_avgpool2(h)
                                                    : kernels::global_avgpool2_broadcast(h);
    pooled = tau3.forward(pooled, ctx.t3);
    return relu.forward(pooled, ctx.r);
}

Tensor MotionExtraction::temporal_conv_block_backward(const Tensor& gy, const BlockCtx& ctx) {
    Tensor g = relu.backward(gy, ctx.r);
    g = tau3.backward(g, ctx.t3);
    g = pool_mode == PoolMode::temporal ? kernels::temporal_avgpool2_backward(g)
                                        : kernels::global_avgpool2_broadcast_backward(g);
    Tensor g_skip = g;  // skip branch into the add
    g = f2.backward(g, ctx.c2);
    g = tau2.backward(g, ctx.t2);
    g = f1.backward(g, ctx.c1);
    g = tau1.backward(g, ctx.t1);
    g.add_(g_skip);
    return g;
}

Tensor MotionExtraction::fuse_motion(const Tensor& f_e, const Tensor& f_m, FuseCtx& ctx) const {
    check_shape(f_e.same_shape(f_m), "fuse_motion: shape mismatch");
    ctx.c = f_e.dim(3);
    const Tensor cat = concat_last({&f_e, &f_m});
    return tau4.forward(cat, ctx.t4);
}

std::pair<Tensor, Tensor> MotionExtraction::fuse_motion_backward(const Tensor& gy,
                                                                 const FuseCtx& ctx) {
    const Tensor g_cat = tau4.backward(gy, ctx.t4);
    return {slice_last(g_cat, 0, ctx.c), slice_last(g_cat, ctx.c, 2 * ctx.c)};
}

Tensor MotionExtraction::forward(const Tensor& event_frames, Ctx& ctx) const {
    ctx.f_e = encode_events(event_frames, ctx.enc);
    const Tensor f_m = temporal_conv_block(ctx.f_e, ctx.block);
    return fuse_motion(ctx.f_e, f_m, ctx.fuse);
}

Tensor MotionExtraction::backward(const Tensor& gy, const Ctx& ctx) {
    auto [g_f_e, g_f_m] = fuse_motion_backward(gy, ctx.fuse);
    Tensor g_from_block = temporal_conv_block_backward(g_f_m, ctx.block);
    g_f_e.add_(g_from_block);
    return encode_events_backward(g_f_e, ctx.enc);
}

void MotionExtraction::register_params(ParamRegistry& reg, const std::string& prefix) {
    event_encoder.register_params(reg, prefix + ".event_encoder");
    tau1.register_params(reg, prefix + ".tau1");
    f1.register_params(reg, prefix + ".f1");
    tau2.register_params(reg, prefix + ".tau2");
    f2.register_params(reg, prefix + ".f2");
    tau3.register_params(reg, prefix + ".tau3");
    tau4.register_params(reg, prefix + ".tau4");
}

int64_t MotionExtraction::macs(int t, int h, int w) const {
    const int h4 = h / 4, w4 = w / 4;
    int64_t total = static_cast<int64_t>(t) * event_encoder.macs(h, w);
    total += tau1.macs(t, h4, w4) + f1.macs(t, h4, w4) + tau2.macs(t, h4, w4) +
             f2.macs(t, h4, w4) + tau3.macs(t, h4, w4) + tau4.macs(t, h4, w4);
    return total;
}

}  // namespace evseg
