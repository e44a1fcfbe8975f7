#include "evseg/encoder.hpp"

namespace evseg {

void EncoderStage::init(int cin, int cout, int stride1, int stride2, Rng& rng) {
    conv1.init(3, 3, cin, cout, true, stride1, 1, rng);
    norm1.init(cout);
    conv2.init(3, 3, cout, cout, true, stride2, 1, rng);
    norm2.init(cout);
}

Tensor EncoderStage::forward(const Tensor& x, Ctx& ctx) const {
    Tensor h = conv1.forward(x, ctx.c1);
    h = norm1.forward(h, ctx.n1);
    h = relu.forward(h, ctx.r1);
    h = conv2.forward(h, ctx.c2);
    h = norm2.forward(h, ctx.n2);
    return relu.forward(h, ctx.r2);
}

Tensor EncoderStage::backward(const Tensor& gy, const Ctx& ctx) {
    Tensor g = relu.backward(gy, ctx.r2);
    g = norm2.backward(g, ctx.n2);
    g = conv2.backward(g, ctx.c2);
    g = relu.backward(g, ctx.r1);
    g = norm1.backward(g, ctx.n1);
    return conv1.backward(g, ctx.c1);
}

void EncoderStage::register_params(ParamRegistry& reg, const std::string& prefix) {
    conv1.register_params(reg, prefix + ".conv1");
    norm1.register_params(reg, prefix + ".norm1");
    conv2.register_params(reg, prefix + ".conv2");
    norm2.register_params(reg, prefix + ".norm2");
}

int64_t EncoderStage::macs(int in_h, int in_w) const {
    const int h1 = in_h / conv1.stride, w1 = in_w / conv1.stride;
    const int h2 = h1 / conv2.stride, w2 = w1 / conv2.stride;
    return conv1.macs(h1, w1) + conv2.macs(h2, w2);
}

void PyramidEncoder::init(int in_ch, const std::array<int, 4>& widths, int mix_width_, Rng& rng) {
    mix_width = mix_width_;
    int cin = in_ch;
    for (int s = 0; s < 4; ++s) {
        // Stage 1 reaches 1/4 with two stride-2 convs; later stages halve once.
        stages[static_cast<size_t>(s)].init(cin, widths[static_cast<size_t>(s)], 2, s == 0 ? 2 : 1,
                                            rng);
        cin = widths[static_cast<size_t>(s)];
        proj[static_cast<size_t>(s)].init(1, 1, cin, mix_width, true, 1, 1, rng);
    }
    fuse.init(1, 1, 4 * mix_width, mix_width, true, 1, 1, rng);
}

Tensor PyramidEncoder::forward(const Tensor& frame, Ctx& ctx) const {
    check_shape(frame.rank() == 3 && frame.dim(0) % 32 == 0 && frame.dim(1) % 32 == 0,
                "encoder: (H,W,C) input with H,W divisible by 32 required, got " +
                    frame.shape_str());
    std::array<Tensor, 4> mixed;
    Tensor h = frame;
    for (int s = 0; s < 4; ++s) {
        h = stages[static_cast<size_t>(s)].forward(h, ctx.stage[static_cast<size_t>(s)]);
        Tensor p = proj[static_cast<size_t>(s)].forward(h, ctx.proj[static_cast<size_t>(s)]);
        mixed[static_cast<size_t>(s)] =
            s == 0 ? std::move(p) : kernels::upsample_nearest(p, 1 << s);
    }
    const Tensor cat = concat_last(
        {&mixed[0], &mixed[1], &mixed[2], &mixed[3]});
    return fuse.forward(cat, ctx.fuse);
}

Tensor PyramidEncoder::backward(const Tensor& gy, const Ctx& ctx) {
    const Tensor gcat = fuse.backward(gy, ctx.fuse);
    // Walk stages deepest-first; each stage's input gradient feeds the next
    // shallower stage together with that stage's mixer branch.
    Tensor carry;
    for (int s = 3; s >= 0; --s) {
        Tensor gmix = slice_last(gcat, s * mix_width, (s + 1) * mix_width);
        if (s > 0) gmix = kernels::upsample_nearest_backward(gmix, 1 << s);
        Tensor gstage_out =
            proj[static_cast<size_t>(s)].backward(gmix, ctx.proj[static_cast<size_t>(s)]);
        if (!carry.empty()) gstage_out.add_(carry);
        carry = stages[static_cast<size_t>(s)].backward(gstage_out,
                                                        ctx.stage[static_cast<size_t>(s)]);
    }
    return carry;
}

void PyramidEncoder::register_params(ParamRegistry& reg, const std::string& prefix) {
    for (int s = 0; s < 4; ++s) {
        stages[static_cast<size_t>(s)].register_params(reg,
                                                       prefix + ".stage" + std::to_string(s + 1));
        proj[static_cast<size_t>(s)].register_params(reg, prefix + ".proj" + std::to_string(s + 1));
    }
    fuse.register_params(reg, prefix + ".fuse");
}

int64_t PyramidEncoder::macs(int h, int w) const {
    int64_t total = 0;
    int sh = h, sw = w;
    for (int s = 0; s < 4; ++s) {
        total += stages[static_cast<size_t>(s)].macs(sh, sw);
        sh /= s == 0 ? 4 : 2;
        sw /= s == 0 ? 4 : 2;
        total += proj[static_cast<size_t>(s)].macs(sh, sw);
    }
    total += fuse.macs(h / 4, w / 4);
    return total;
}

}  // namespace evseg
