#pragma once

#include <vector>

#include "evseg/encoder.hpp"

namespace evseg {

enum class PoolMode { temporal, global_broadcast };

PoolMode parse_pool_mode(const std::string& name);
std::string pool_mode_name(PoolMode m);

// Motion extraction: a per-frame event encoder produces short-term features
// F_E; a temporal convolutional block turns them into long-term motion
// features F_M; concatenation plus a pointwise projection fuses both into
// F_m at the image-feature width.
struct MotionExtraction {
    PyramidEncoder event_encoder;
    Conv3d tau1, f1, tau2, f2, tau3, tau4;
    Relu relu;
    PoolMode pool_mode = PoolMode::temporal;

    void init(int in_ch, const std::array<int, 4>& widths, int feat_width, Rng& rng);

    struct EncodeCtx {
        std::vector<PyramidEncoder::Ctx> frames;
    };
    // (T,H,W,1) event frames -> per-frame features (T,H/4,W/4,C).
    Tensor encode_events(const Tensor& event_frames, EncodeCtx& ctx) const;
    Tensor encode_events_backward(const Tensor& gy, const EncodeCtx& ctx);

    struct BlockCtx {
        Conv3d::Ctx t1, t2, t3, c1, c2;
        Tensor pooled_in;  // skip-sum entering the pool
        Relu::Ctx r;
    };
    // tau1 -> f1 -> tau2 -> f2 -> skip-add -> pool -> tau3 -> ReLU.
    Tensor temporal_conv_block(const Tensor& f_e, BlockCtx& ctx) const;
    Tensor temporal_conv_block_backward(const Tensor& gy, const BlockCtx& ctx);

    struct FuseCtx {
        Conv3d::Ctx t4;
        int c = 0;
    };
    // concat(F_E, F_M) -> pointwise projection back to the feature width.
    Tensor fuse_motion(const Tensor& f_e, const Tensor& f_m, FuseCtx& ctx) const;
    // Returns gradients wrt (f_e, f_m).
    std::pair<Tensor, Tensor> fuse_motion_backward(const Tensor& gy, const FuseCtx& ctx);

    struct Ctx {
        EncodeCtx enc;
        BlockCtx block;
        FuseCtx fuse;
        Tensor f_e;
    };
    // Full module: event frames -> fused motion features.
    Tensor forward(const Tensor& event_frames, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int t, int h, int w) const;
};

}  // namespace evseg
