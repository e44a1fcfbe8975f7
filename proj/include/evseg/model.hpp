#pragma once

#include <array>
#include <vector>

#include "evseg/decoder.hpp"
#include "evseg/fusion.hpp"
#include "evseg/motion.hpp"

namespace evseg {

struct ModelConfig {
    int num_classes = 5;
    int frames = 4;  // current frame plus references
    int feat_width = 32;
    std::array<int, 4> image_widths = {16, 32, 64, 128};
    std::array<int, 4> event_widths = {8, 16, 32, 64};
    FusionArrangement arrangement = FusionArrangement::channel_then_spatial;
    PoolMode pool_mode = PoolMode::temporal;
    bool aux_head = false;    // extra supervision from the fused features
    double aux_weight = 0.4;  // scale of the auxiliary loss term
};

void validate(const ModelConfig& cfg);

// Full segmentation network: a shared per-frame image encoder, event-driven
// motion features, per-frame attention fusion of the two, and a temporal
// decoder that predicts the current frame's classes.
struct SegModel {
    ModelConfig cfg;
    PyramidEncoder image_encoder;
    MotionExtraction motion;
    MotionFusion fusion;
    TemporalDecoder decoder;
    Conv2d aux;  // 1x1 head over the current frame's fused features

    void init(const ModelConfig& cfg_, Rng& rng);

    struct Ctx {
        std::vector<PyramidEncoder::Ctx> image;
        MotionExtraction::Ctx motion;
        std::vector<MotionFusion::Ctx> fusion;
        TemporalDecoder::Ctx dec;
        Tensor fused;  // (T,h/4,w/4,C) decoder input stack
        Conv2d::Ctx aux_c;
        Tensor aux_out;  // (H,W,K) auxiliary logits when the head is enabled
        int h = 0, w = 0;
    };
    // frames: (T,H,W,3) images; events: (T,H,W,1) encoded event frames;
    // index 0 is the current frame. Returns (H,W,K) class logits.
    Tensor forward(const Tensor& frames, const Tensor& events, Ctx& ctx) const;
    // g_aux may be empty when the auxiliary head is disabled or unused.
    void backward(const Tensor& g_logits, const Tensor& g_aux, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    int64_t macs(int h, int w) const;
    int64_t flops(int h, int w) const { return 2 * macs(h, w); }
    int64_t param_count();
};

}  // namespace evseg
