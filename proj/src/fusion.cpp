#include "evseg/fusion.hpp"

#include <cmath>

namespace evseg {

namespace {

Tensor transpose2d(const Tensor& m) {
    const int r = m.dim(0), c = m.dim(1);
    Tensor t({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) t.at(j, i) = m.at(i, j);
    return t;
}

// dL/dscores for y = softmax_rows(scores), given dL/dy and y.
Tensor softmax_rows_backward(const Tensor& gy, const Tensor& y) {
    const int r = y.dim(0), c = y.dim(1);
    Tensor gs({r, c});
    for (int i = 0; i < r; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += gy.at(i, j) * y.at(i, j);
        for (int j = 0; j < c; ++j) gs.at(i, j) = y.at(i, j) * (gy.at(i, j) - dot);
    }
    return gs;
}

}  // namespace

void ChannelAttention::init(int channels, Rng& rng) {
    f3_img.init(3, 3, channels, channels, true, 1, channels, rng);
    f4_img.init(5, 5, channels, channels, true, 1, channels, rng);
    f3_mot.init(3, 3, channels, channels, true, 1, channels, rng);
    f4_mot.init(5, 5, channels, channels, true, 1, channels, rng);
    wq.init(1, 1, 2 * channels, channels, true, 1, 1, rng);
    wk.init(1, 1, 2 * channels, channels, true, 1, 1, rng);
    wv.init(1, 1, 2 * channels, channels, true, 1, 1, rng);
    alpha_raw.init({1});
    // Start the temperature at the channel count: the averaged logits carry
    // the features' coherent means, so a unit temperature would saturate the
    // softmax before it gets a gradient.
    alpha_raw.value[0] = std::log(static_cast<double>(channels));
}

Tensor ChannelAttention::forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const {
    check_shape(f_i.rank() == 3 && f_i.same_shape(f_m),
                "channel attention: matching (H,W,C) inputs required");
    const int h = f_i.dim(0), w = f_i.dim(1), c = f_i.dim(2);
    ctx.h = h;
    ctx.w = w;

    const Tensor m3 = f3_mot.forward(f_m, ctx.f3m);
    const Tensor m4 = f4_mot.forward(f_m, ctx.f4m);
    const Tensor mb = concat_last({&m3, &m4});
    const Tensor i3 = f3_img.forward(f_i, ctx.f3i);
    const Tensor i4 = f4_img.forward(f_i, ctx.f4i);
    const Tensor ib = concat_last({&i3, &i4});

    ctx.qt = wq.forward(mb, ctx.q).with_shape({h * w, c});
    ctx.kt = wk.forward(ib, ctx.k).with_shape({h * w, c});
    ctx.vt = wv.forward(ib, ctx.v).with_shape({h * w, c});

    // The key/query inner products run over all H*W positions, and the
    // post-ReLU features feeding them have nonzero means, so the sums grow
    // with the position count; averaging keeps the logit scale geometry-free
    // so the softmax starts soft and the temperature keeps a usable gradient.
    const double alpha = std::exp(alpha_raw.value[0]);
    const double norm = static_cast<double>(h) * w;
    Tensor scores = kernels::matmul_tn(ctx.kt, ctx.qt);
    scores.scale_(1.0 / (norm * alpha));
    ctx.scores = scores;

    if (softmax_axis == SoftmaxAxis::row) {
        kernels::softmax_rows_inplace(scores);
        ctx.attn = scores;
    } else {
        Tensor t = transpose2d(scores);
        kernels::softmax_rows_inplace(t);
        ctx.attn = transpose2d(t);
    }

    Tensor out = kernels::matmul_nn(ctx.vt, ctx.attn).with_shape({h, w, c});
    if (residual) out.add_(f_i);
    return out;
}

std::pair<Tensor, Tensor> ChannelAttention::backward(const Tensor& gy, const Ctx& ctx) {
    const int h = ctx.h, w = ctx.w, c = gy.dim(2);
    const Tensor g_flat = gy.with_shape({h * w, c});

    const Tensor g_v = kernels::matmul_nt(g_flat, ctx.attn);
    const Tensor g_attn = kernels::matmul_tn(ctx.vt, g_flat);

    Tensor g_scores;
    if (softmax_axis == SoftmaxAxis::row) {
        g_scores = softmax_rows_backward(g_attn, ctx.attn);
    } else {
        g_scores = transpose2d(
            softmax_rows_backward(transpose2d(g_attn), transpose2d(ctx.attn)));
    }

    double alpha_term = 0.0;
    for (int64_t i = 0; i < g_scores.size(); ++i) alpha_term += g_scores[i] * ctx.scores[i];
    alpha_raw.grad[0] += -alpha_term;

    const double alpha = std::exp(alpha_raw.value[0]);
    const double norm = static_cast<double>(h) * w;
    Tensor g_raw = g_scores;
    g_raw.scale_(1.0 / (norm * alpha));

    const Tensor g_k = kernels::matmul_nt(ctx.qt, g_raw);
    const Tensor g_q = kernels::matmul_nn(ctx.kt, g_raw);

    const Tensor g_mb = wq.backward(g_q.with_shape({h, w, c}), ctx.q);
    const Tensor g_ib_k = wk.backward(g_k.with_shape({h, w, c}), ctx.k);
    Tensor g_ib = wv.backward(g_v.with_shape({h, w, c}), ctx.v);
    g_ib.add_(g_ib_k);

    Tensor g_f_m = f3_mot.backward(slice_last(g_mb, 0, c), ctx.f3m);
    g_f_m.add_(f4_mot.backward(slice_last(g_mb, c, 2 * c), ctx.f4m));

    Tensor g_f_i = f3_img.backward(slice_last(g_ib, 0, c), ctx.f3i);
    g_f_i.add_(f4_img.backward(slice_last(g_ib, c, 2 * c), ctx.f4i));
    if (residual) g_f_i.add_(gy);
    return {std::move(g_f_i), std::move(g_f_m)};
}

void ChannelAttention::register_params(ParamRegistry& reg, const std::string& prefix) {
    f3_img.register_params(reg, prefix + ".f3_img");
    f4_img.register_params(reg, prefix + ".f4_img");
    f3_mot.register_params(reg, prefix + ".f3_mot");
    f4_mot.register_params(reg, prefix + ".f4_mot");
    wq.register_params(reg, prefix + ".wq");
    wk.register_params(reg, prefix + ".wk");
    wv.register_params(reg, prefix + ".wv");
    reg.add(prefix + ".temperature_raw", &alpha_raw);
}

int64_t ChannelAttention::macs(int h, int w) const {
    const int64_t c = f3_img.w.value.dim(3);
    int64_t total = f3_img.macs(h, w) + f4_img.macs(h, w) + f3_mot.macs(h, w) +
                    f4_mot.macs(h, w) + wq.macs(h, w) + wk.macs(h, w) + wv.macs(h, w);
    total += 2 * static_cast<int64_t>(h) * w * c * c;  // K^T Q and V A products
    return total;
}

void SpatialAttention::init(Rng& rng) { f.init(7, 7, 4, 1, true, 1, 1, rng); }

Tensor SpatialAttention::forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const {
    check_shape(f_i.rank() == 3 && f_m.rank() == 3 && f_i.dim(0) == f_m.dim(0) &&
                    f_i.dim(1) == f_m.dim(1),
                "spatial attention: matching spatial shapes required");
    ctx.f_i = f_i;
    ctx.f_m = f_m;

    Tensor max_i, avg_i, max_m, avg_m;
    kernels::channel_pools(f_i, max_i, avg_i, ctx.argmax_i);
    kernels::channel_pools(f_m, max_m, avg_m, ctx.argmax_m);
    const Tensor cat = concat_last({&max_i, &avg_i, &max_m, &avg_m});

    Tensor z = f.forward(cat, ctx.fc);
    ctx.gate = Tensor(z.shape);
    for (int64_t i = 0; i < z.size(); ++i) ctx.gate[i] = 1.0 / (1.0 + std::exp(-z[i]));

    const int h = f_i.dim(0), w = f_i.dim(1), c = f_i.dim(2);
    Tensor out({h, w, c});
    for (int64_t p = 0; p < static_cast<int64_t>(h) * w; ++p)
        for (int ci = 0; ci < c; ++ci) out[p * c + ci] = f_i[p * c + ci] * ctx.gate[p];
    return out;
}

std::pair<Tensor, Tensor> SpatialAttention::backward(const Tensor& gy, const Ctx& ctx) {
    const int h = gy.dim(0), w = gy.dim(1), c = gy.dim(2);
    const int cm = ctx.f_m.dim(2);
    const int64_t n = static_cast<int64_t>(h) * w;

    Tensor g_gate({h, w, 1});
    Tensor g_f_i(ctx.f_i.shape);
    for (int64_t p = 0; p < n; ++p) {
        double s = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            s += gy[p * c + ci] * ctx.f_i[p * c + ci];
            g_f_i[p * c + ci] = gy[p * c + ci] * ctx.gate[p];
        }
        g_gate[p] = s;
    }

    Tensor g_z(g_gate.shape);
    for (int64_t p = 0; p < n; ++p)
        g_z[p] = g_gate[p] * ctx.gate[p] * (1.0 - ctx.gate[p]);

    const Tensor g_cat = f.backward(g_z, ctx.fc);

    Tensor g_f_m(ctx.f_m.shape);
    for (int64_t p = 0; p < n; ++p) {
        g_f_i[p * c + ctx.argmax_i[static_cast<size_t>(p)]] += g_cat[p * 4 + 0];
        for (int ci = 0; ci < c; ++ci) g_f_i[p * c + ci] += g_cat[p * 4 + 1] / c;
        g_f_m[p * cm + ctx.argmax_m[static_cast<size_t>(p)]] += g_cat[p * 4 + 2];
        for (int ci = 0; ci < cm; ++ci) g_f_m[p * cm + ci] += g_cat[p * 4 + 3] / cm;
    }
    return {std::move(g_f_i), std::move(g_f_m)};
}

void SpatialAttention::register_params(ParamRegistry& reg, const std::string& prefix) {
    f.register_params(reg, prefix + ".f");
}

int64_t SpatialAttention::macs(int h, int w) const { return f.macs(h, w); }

FusionArrangement parse_arrangement(const std::string& name) {
    if (name == "no_fusion") return FusionArrangement::no_fusion;
    if (name == "channel") return FusionArrangement::channel;
    if (name == "spatial") return FusionArrangement::spatial;
    if (name == "spatial_then_channel") return FusionArrangement::spatial_then_channel;
    if (name == "parallel") return FusionArrangement::parallel;
    if (name == "channel_then_spatial") return FusionArrangement::channel_then_spatial;
    throw ConfigError("unknown fusion arrangement '" + name + "'");
}

std::string arrangement_name(FusionArrangement a) {
    switch (a) {
        case FusionArrangement::no_fusion: return "no_fusion";
        case FusionArrangement::channel: return "channel";
        case FusionArrangement::spatial: return "spatial";
        case FusionArrangement::spatial_then_channel: return "spatial_then_channel";
        case FusionArrangement::parallel: return "parallel";
        case FusionArrangement::channel_then_spatial: return "channel_then_spatial";
    }
    throw ConfigError("unhandled arrangement");
}

void MotionFusion::init(int channels, Rng& rng) {
    channel_attn.init(channels, rng);
    spatial_attn.init(rng);
}

Tensor MotionFusion::forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const {
    switch (arrangement) {
        case FusionArrangement::no_fusion:
            return f_i;
        case FusionArrangement::channel:
            return channel_attn.forward(f_i, f_m, ctx.ca);
        case FusionArrangement::spatial:
            return spatial_attn.forward(f_i, f_m, ctx.sa);
        case FusionArrangement::channel_then_spatial: {
            const Tensor mid = channel_attn.forward(f_i, f_m, ctx.ca);
            return spatial_attn.forward(mid, f_m, ctx.sa);
        }
        case FusionArrangement::spatial_then_channel: {
            const Tensor mid = spatial_attn.forward(f_i, f_m, ctx.sa);
            return channel_attn.forward(mid, f_m, ctx.ca);
        }
        case FusionArrangement::parallel: {
            Tensor a = channel_attn.forward(f_i, f_m, ctx.ca);
            const Tensor b = spatial_attn.forward(f_i, f_m, ctx.sa);
            a.add_(b);
            a.scale_(0.5);
            return a;
        }
    }
    throw ConfigError("unhandled arrangement");
}

std::pair<Tensor, Tensor> MotionFusion::backward(const Tensor& gy, const Ctx& ctx) {
    switch (arrangement) {
        case FusionArrangement::no_fusion: {
            Tensor g_m(gy.shape);
            return {gy, std::move(g_m)};
        }
        case FusionArrangement::channel:
            return channel_attn.backward(gy, ctx.ca);
        case FusionArrangement::spatial:
            return spatial_attn.backward(gy, ctx.sa);
        case FusionArrangement::channel_then_spatial: {
            auto [g_mid, g_m2] = spatial_attn.backward(gy, ctx.sa);
            auto [g_i, g_m1] = channel_attn.backward(g_mid, ctx.ca);
            g_m1.add_(g_m2);
            return {std::move(g_i), std::move(g_m1)};
        }
        case FusionArrangement::spatial_then_channel: {
            auto [g_mid, g_m1] = channel_attn.backward(gy, ctx.ca);
            auto [g_i, g_m2] = spatial_attn.backward(g_mid, ctx.sa);
            g_m1.add_(g_m2);
            return {std::move(g_i), std::move(g_m1)};
        }
        case FusionArrangement::parallel: {
            Tensor g_half = gy;
            g_half.scale_(0.5);
            auto [g_i1, g_m1] = channel_attn.backward(g_half, ctx.ca);
            auto [g_i2, g_m2] = spatial_attn.backward(g_half, ctx.sa);
            g_i1.add_(g_i2);
            g_m1.add_(g_m2);
            return {std::move(g_i1), std::move(g_m1)};
        }
    }
    throw ConfigError("unhandled arrangement");
}

void MotionFusion::register_params(ParamRegistry& reg, const std::string& prefix) {
    const bool uses_channel = arrangement == FusionArrangement::channel ||
                              arrangement == FusionArrangement::channel_then_spatial ||
                              arrangement == FusionArrangement::spatial_then_channel ||
                              arrangement == FusionArrangement::parallel;
    const bool uses_spatial = arrangement == FusionArrangement::spatial ||
                              arrangement == FusionArrangement::channel_then_spatial ||
                              arrangement == FusionArrangement::spatial_then_channel ||
                              arrangement == FusionArrangement::parallel;
    if (uses_channel) channel_attn.register_params(reg, prefix + ".channel");
    if (uses_spatial) spatial_attn.register_params(reg, prefix + ".spatial");
}

int64_t MotionFusion::macs(int h, int w) const {
    switch (arrangement) {
        case FusionArrangement::no_fusion:
            return 0;
        case FusionArrangement::channel:
            return channel_attn.macs(h, w);
        case FusionArrangement::spatial:
            return spatial_attn.macs(h, w);
        default:
            return channel_attn.macs(h, w) + spatial_attn.macs(h, w);
    }
}

}  // namespace evseg
