#include "evseg/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evseg {

namespace {

// Candidate slot for frame t and offset (dy,dx) within the 3x3 window.
int slot(int t, int dy, int dx) { return (t * 3 + dy + 1) * 3 + dx + 1; }

// Softmax-weighted sum of values; uses ctx.q/k/v, fills ctx.attn.
Tensor attention_forward(TemporalDecoder::AttentionCtx& ctx) {
    const int tn = static_cast<int>(ctx.k.size());
    const int h = ctx.q.dim(0), w = ctx.q.dim(1), c = ctx.q.dim(2);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    ctx.attn = Tensor({h, w, 9 * tn});
    Tensor out({h, w, c});
    std::vector<double> logits(static_cast<size_t>(9) * tn);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double peak = -std::numeric_limits<double>::infinity();
            for (int t = 0; t < tn; ++t) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        double s = 0.0;
                        for (int cc = 0; cc < c; ++cc)
                            s += ctx.q.at(y, x, cc) * ctx.k[static_cast<size_t>(t)].at(yy, xx, cc);
                        logits[static_cast<size_t>(slot(t, dy, dx))] = s * scale;
                        peak = std::max(peak, s * scale);
                    }
                }
            }
            double z = 0.0;
            for (int t = 0; t < tn; ++t) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const int ci = slot(t, dy, dx);
                        const double e = std::exp(logits[static_cast<size_t>(ci)] - peak);
                        ctx.attn.at(y, x, ci) = e;
                        z += e;
                    }
                }
            }
            for (int t = 0; t < tn; ++t) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const int ci = slot(t, dy, dx);
                        const double a = ctx.attn.at(y, x, ci) / z;
                        ctx.attn.at(y, x, ci) = a;
                        for (int cc = 0; cc < c; ++cc)
                            out.at(y, x, cc) += a * ctx.v[static_cast<size_t>(t)].at(yy, xx, cc);
                    }
                }
            }
        }
    }
    return out;
}

// Serial backward: scatter into neighbor frames keeps accumulation order fixed.
void attention_backward(const Tensor& g_out, const TemporalDecoder::AttentionCtx& ctx, Tensor& gq,
                        std::vector<Tensor>& gk, std::vector<Tensor>& gv) {
    const int tn = static_cast<int>(ctx.k.size());
    const int h = ctx.q.dim(0), w = ctx.q.dim(1), c = ctx.q.dim(2);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    gq = Tensor::zeros_like(ctx.q);
    gk.assign(static_cast<size_t>(tn), Tensor::zeros_like(ctx.q));
    gv.assign(static_cast<size_t>(tn), Tensor::zeros_like(ctx.q));
    std::vector<double> ga(static_cast<size_t>(9) * tn);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double dot = 0.0;
            for (int t = 0; t < tn; ++t) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const int ci = slot(t, dy, dx);
                        const double a = ctx.attn.at(y, x, ci);
                        double s = 0.0;
                        for (int cc = 0; cc < c; ++cc) {
                            s += g_out.at(y, x, cc) * ctx.v[static_cast<size_t>(t)].at(yy, xx, cc);
                            gv[static_cast<size_t>(t)].at(yy, xx, cc) += a * g_out.at(y, x, cc);
                        }
                        ga[static_cast<size_t>(ci)] = s;
                        dot += a * s;
                    }
                }
            }
            for (int t = 0; t < tn; ++t) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const int ci = slot(t, dy, dx);
                        const double a = ctx.attn.at(y, x, ci);
                        const double gl = a * (ga[static_cast<size_t>(ci)] - dot) * scale;
                        for (int cc = 0; cc < c; ++cc) {
                            gq.at(y, x, cc) += gl * ctx.k[static_cast<size_t>(t)].at(yy, xx, cc);
                            gk[static_cast<size_t>(t)].at(yy, xx, cc) += gl * ctx.q.at(y, x, cc);
                        }
                    }
                }
            }
        }
    }
}

void set_frame(Tensor& stack, int t, const Tensor& frame) {
    std::copy(frame.v.begin(), frame.v.end(), stack.v.begin() + t * frame.size());
}

}  // namespace

void TemporalDecoder::Block::init(int channels, Rng& rng) {
    wq.init(1, 1, channels, channels, true, 1, 1, rng);
    wk.init(1, 1, channels, channels, true, 1, 1, rng);
    wv.init(1, 1, channels, channels, true, 1, 1, rng);
    wo.init(1, 1, channels, channels, true, 1, 1, rng);
}

Tensor TemporalDecoder::Block::forward(const Tensor& x, Ctx& ctx) const {
    const int tn = x.dim(0);
    ctx.kc.resize(static_cast<size_t>(tn));
    ctx.vc.resize(static_cast<size_t>(tn));
    ctx.at.k.resize(static_cast<size_t>(tn));
    ctx.at.v.resize(static_cast<size_t>(tn));
    const Tensor x0 = slice_frame(x, 0);
    ctx.at.q = wq.forward(x0, ctx.qc);
    for (int t = 0; t < tn; ++t) {
        const Tensor frame = slice_frame(x, t);
        ctx.at.k[static_cast<size_t>(t)] = wk.forward(frame, ctx.kc[static_cast<size_t>(t)]);
        ctx.at.v[static_cast<size_t>(t)] = wv.forward(frame, ctx.vc[static_cast<size_t>(t)]);
    }
    const Tensor ao = attention_forward(ctx.at);
    Tensor o = wo.forward(ao, ctx.oc);
    o.add_(x0);
    Tensor out = x;
    set_frame(out, 0, o);
    return out;
}

Tensor TemporalDecoder::Block::backward(const Tensor& gy, const Ctx& ctx) {
    const int tn = gy.dim(0);
    const Tensor g0 = slice_frame(gy, 0);
    const Tensor g_ao = wo.backward(g0, ctx.oc);
    Tensor gq;
    std::vector<Tensor> gk, gv;
    attention_backward(g_ao, ctx.at, gq, gk, gv);
    Tensor gx(gy.shape);
    for (int t = 0; t < tn; ++t) {
        Tensor gt = t == 0 ? g0 : slice_frame(gy, t);
        gt.add_(wk.backward(gk[static_cast<size_t>(t)], ctx.kc[static_cast<size_t>(t)]));
        gt.add_(wv.backward(gv[static_cast<size_t>(t)], ctx.vc[static_cast<size_t>(t)]));
        if (t == 0) gt.add_(wq.backward(gq, ctx.qc));
        set_frame(gx, t, gt);
    }
    return gx;
}

void TemporalDecoder::Block::register_params(ParamRegistry& reg, const std::string& prefix) {
    wq.register_params(reg, prefix + ".wq");
    wk.register_params(reg, prefix + ".wk");
    wv.register_params(reg, prefix + ".wv");
    wo.register_params(reg, prefix + ".wo");
}

int64_t TemporalDecoder::Block::macs(int t, int in_h, int in_w) const {
    const int c = wq.w.value.dim(3);
    int64_t total = wq.macs(in_h, in_w) + wo.macs(in_h, in_w);
    total += static_cast<int64_t>(t) * (wk.macs(in_h, in_w) + wv.macs(in_h, in_w));
    // Dot products against keys plus the weighted value sum, over all valid
    // window slots (border pixels lose the out-of-bounds offsets).
    const int64_t slots =
        static_cast<int64_t>(3 * in_h - 2) * (3 * in_w - 2) * t;
    return total + 2 * slots * c;
}

void TemporalDecoder::init(int num_frames_, int channels_, int num_classes_, Rng& rng) {
    check_config(num_frames_ >= 1, "decoder needs at least one frame");
    check_config(channels_ >= 1 && num_classes_ >= 1, "decoder widths must be positive");
    num_frames = num_frames_;
    channels = channels_;
    num_classes = num_classes_;
    embed.init({num_frames, channels});
    const double bound = std::sqrt(1.0 / channels);
    for (int64_t i = 0; i < embed.value.size(); ++i)
        embed.value[i] = rng.uniform(-bound, bound);
    blocks[0].init(channels, rng);
    blocks[1].init(channels, rng);
    head.init(1, 1, channels, num_classes, true, 1, 1, rng);
}

Tensor TemporalDecoder::forward(const Tensor& features, Ctx& ctx) const {
    check_shape(features.rank() == 4, "decoder: (T,h,w,C) feature stack required");
    check_shape(features.dim(0) == num_frames && features.dim(3) == channels,
                "decoder: stack " + features.shape_str() + " does not match (" +
                    std::to_string(num_frames) + ",h,w," + std::to_string(channels) + ")");
    ctx.h4 = features.dim(1);
    ctx.w4 = features.dim(2);
    Tensor x = features;
    for (int t = 0; t < num_frames; ++t)
        for (int y = 0; y < ctx.h4; ++y)
            for (int xx = 0; xx < ctx.w4; ++xx)
                for (int c = 0; c < channels; ++c) x.at(t, y, xx, c) += embed.value.at(t, c);
    x = blocks[0].forward(x, ctx.b1);
    x = blocks[1].forward(x, ctx.b2);
    const Tensor logits4 = head.forward(slice_frame(x, 0), ctx.head_c);
    return kernels::upsample_bilinear(logits4, 4);
}

Tensor TemporalDecoder::backward(const Tensor& g_logits, const Ctx& ctx) {
    const Tensor g4 = kernels::upsample_bilinear_backward(g_logits, 4, ctx.h4, ctx.w4);
    const Tensor g0 = head.backward(g4, ctx.head_c);
    Tensor gy2({num_frames, ctx.h4, ctx.w4, channels});
    set_frame(gy2, 0, g0);
    const Tensor gx2 = blocks[1].backward(gy2, ctx.b2);
    Tensor gx1 = blocks[0].backward(gx2, ctx.b1);
    for (int t = 0; t < num_frames; ++t)
        for (int y = 0; y < ctx.h4; ++y)
            for (int x = 0; x < ctx.w4; ++x)
                for (int c = 0; c < channels; ++c) embed.grad.at(t, c) += gx1.at(t, y, x, c);
    return gx1;
}

void TemporalDecoder::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".embed", &embed);
    blocks[0].register_params(reg, prefix + ".block1");
    blocks[1].register_params(reg, prefix + ".block2");
    head.register_params(reg, prefix + ".head");
}

int64_t TemporalDecoder::macs(int in_h, int in_w) const {
    return blocks[0].macs(num_frames, in_h, in_w) + blocks[1].macs(num_frames, in_h, in_w) +
           head.macs(in_h, in_w);
}

IntImage predict_mask(const Tensor& logits) {
    check_shape(logits.rank() == 3, "predict_mask: (H,W,K) logits required");
    const int h = logits.dim(0), w = logits.dim(1), k = logits.dim(2);
    check_shape(k >= 1, "predict_mask: at least one class required");
    IntImage mask(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best = 0;
            double best_v = logits.at(y, x, 0);
            for (int c = 0; c < k; ++c) {
                const double v = logits.at(y, x, c);
                if (!std::isfinite(v))
                    throw NumericError("predict_mask: non-finite logit at (" + std::to_string(y) +
                                       "," + std::to_string(x) + ")");
                if (v > best_v) {
                    best = c;
                    best_v = v;
                }
            }
            mask.at(y, x) = best;
        }
    }
    return mask;
}

}  // namespace evseg
