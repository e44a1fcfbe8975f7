#pragma once

#include <array>

#include "evseg/layers.hpp"

namespace evseg {

// One pyramid stage: two conv -> norm -> ReLU units. The first conv always
// halves the spatial size; the second halves again only in stage 1.
struct EncoderStage {
    Conv2d conv1, conv2;
    ChannelNorm norm1, norm2;
    Relu relu;

    void init(int cin, int cout, int stride1, int stride2, Rng& rng);

    struct Ctx {
        Conv2d::Ctx c1, c2;
        ChannelNorm::Ctx n1, n2;
        Relu::Ctx r1, r2;
    };
    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int in_h, int in_w) const;
};

// Four-stage feature pyramid at scales {1/4, 1/8, 1/16, 1/32} plus a mixer
// that projects every stage to a common width, upsamples to 1/4 scale,
// concatenates, and fuses with a final linear projection.
struct PyramidEncoder {
    std::array<EncoderStage, 4> stages;
    std::array<Conv2d, 4> proj;
    Conv2d fuse;
    int mix_width = 0;

    void init(int in_ch, const std::array<int, 4>& widths, int mix_width_, Rng& rng);

    struct Ctx {
        std::array<EncoderStage::Ctx, 4> stage;
        std::array<Conv2d::Ctx, 4> proj;
        Conv2d::Ctx fuse;
    };
    // (H,W,in_ch) -> (H/4,W/4,mix_width); H and W must be divisible by 32.
    Tensor forward(const Tensor& frame, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int h, int w) const;
};

}  // namespace evseg
