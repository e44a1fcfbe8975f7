#pragma once

#include <array>
#include <vector>

#include "evseg/image_io.hpp"
#include "evseg/layers.hpp"

namespace evseg {

// Temporal decoder: each query pixel of the current frame attends over the
// 3x3 spatial neighborhood of its own site in every frame of the stack
// (current plus references), then a linear head plus 4x bilinear upsampling
// produces full-resolution class logits.
struct TemporalDecoder {
    struct AttentionCtx {
        Tensor q;                  // (H,W,C) queries from the current frame
        std::vector<Tensor> k, v;  // per-frame keys/values (H,W,C)
        Tensor attn;               // (H,W,9T) weights; out-of-bounds slots stay 0
    };

    // One refinement block: scaled dot-product attention of the current frame
    // against the whole stack, with a residual connection on the output
    // projection. Only frame 0 of the stack changes.
    struct Block {
        Conv2d wq, wk, wv, wo;

        void init(int channels, Rng& rng);

        struct Ctx {
            Conv2d::Ctx qc, oc;
            std::vector<Conv2d::Ctx> kc, vc;
            AttentionCtx at;
        };
        Tensor forward(const Tensor& x, Ctx& ctx) const;
        Tensor backward(const Tensor& gy, const Ctx& ctx);

        void register_params(ParamRegistry& reg, const std::string& prefix);
        int64_t macs(int t, int in_h, int in_w) const;
    };

    Param embed;  // (num_frames, channels) per-frame embedding, added once
    std::array<Block, 2> blocks;
    Conv2d head;
    int num_frames = 0, channels = 0, num_classes = 0;

    void init(int num_frames_, int channels_, int num_classes_, Rng& rng);

    struct Ctx {
        Block::Ctx b1, b2;
        Conv2d::Ctx head_c;
        int h4 = 0, w4 = 0;
    };
    // (T,h,w,C) feature stack -> (4h,4w,K) class logits.
    Tensor forward(const Tensor& features, Ctx& ctx) const;
    // Returns the gradient wrt the feature stack.
    Tensor backward(const Tensor& g_logits, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    // in_h/in_w are the decoder's own (quarter-scale) input resolution.
    int64_t macs(int in_h, int in_w) const;
};

// Per-pixel argmax over the class axis; ties break to the lowest class id.
// Any non-finite logit raises NumericError.
IntImage predict_mask(const Tensor& logits);

}  // namespace evseg
