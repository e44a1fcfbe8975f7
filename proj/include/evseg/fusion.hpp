#pragma once

#include <utility>

#include "evseg/layers.hpp"

namespace evseg {

// Channel attention: the motion features supply the query, the image
// features supply keys and values. Each path runs parallel 3x3 and 5x5
// depthwise convs whose concatenation is projected pointwise; the attention
// matrix is C x C over channels, its logits averaged over positions and scaled by a
// learnable temperature, softmax applied along a configurable axis. Output
// optionally adds the image features back as a residual.
struct ChannelAttention {
    Conv2d f3_img, f4_img, f3_mot, f4_mot;
    Conv2d wq, wk, wv;
    Param alpha_raw;  // temperature = exp(alpha_raw), always positive
    bool residual = true;
    enum class SoftmaxAxis { row, col };
    SoftmaxAxis softmax_axis = SoftmaxAxis::row;

    void init(int channels, Rng& rng);

    struct Ctx {
        Conv2d::Ctx f3i, f4i, f3m, f4m, q, k, v;
        Tensor qt, kt, vt;  // (HW,C) views
        Tensor attn;        // (C,C) post-softmax
        Tensor scores;      // (C,C) post-scale pre-softmax
        int h = 0, w = 0;
    };
    Tensor forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const;
    // Returns gradients wrt (f_i, f_m).
    std::pair<Tensor, Tensor> backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int h, int w) const;
};

// Spatial attention: channel-axis max and mean maps of both inputs feed a
// 7x7 conv and sigmoid, producing a (0,1) gate multiplied into the image
// features. No residual; the gate strictly shrinks magnitudes.
struct SpatialAttention {
    Conv2d f;  // 7x7, 4 -> 1, bias

    void init(Rng& rng);

    struct Ctx {
        Tensor f_i, f_m;       // saved inputs
        Tensor gate;           // (H,W,1) post-sigmoid
        std::vector<int> argmax_i, argmax_m;
        Conv2d::Ctx fc;
    };
    Tensor forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const;
    std::pair<Tensor, Tensor> backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int h, int w) const;
};

enum class FusionArrangement {
    no_fusion,
    channel,
    spatial,
    spatial_then_channel,
    parallel,
    channel_then_spatial,
};

FusionArrangement parse_arrangement(const std::string& name);
std::string arrangement_name(FusionArrangement a);

// Composes the two attention layers per the configured arrangement. Only the
// layers an arrangement uses are registered/counted for it.
struct MotionFusion {
    ChannelAttention channel_attn;
    SpatialAttention spatial_attn;
    FusionArrangement arrangement = FusionArrangement::channel_then_spatial;

    void init(int channels, Rng& rng);

    struct Ctx {
        ChannelAttention::Ctx ca;
        SpatialAttention::Ctx sa;
    };
    Tensor forward(const Tensor& f_i, const Tensor& f_m, Ctx& ctx) const;
    std::pair<Tensor, Tensor> backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int h, int w) const;
};

}  // namespace evseg
