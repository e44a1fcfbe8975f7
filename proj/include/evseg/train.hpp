#pragma once

#include <string>
#include <vector>

#include "evseg/checkpoint.hpp"
#include "evseg/dataset.hpp"
#include "evseg/metrics.hpp"
#include "evseg/model.hpp"
#include "evseg/optim.hpp"

namespace evseg {

struct TrainConfig {
    ModelConfig model;
    AugmentConfig augment;
    std::string dataset_root;
    std::string out_dir;
    int iters = 2000;
    double lr = 6e-5;
    double poly_power = 0.9;
    double weight_decay = 0.01;
    int frame_stride = 3;  // gap between the stacked past frames
    int log_every = 50;
    uint64_t seed = 1;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
    std::vector<double> losses;   // total loss, one entry per iteration
    std::string checkpoint_path;  // final weights
    std::string log_path;         // CSV loss curve
};

// Single-sample training on the train split: poly-decayed AdamW on softmax
// cross entropy of the current frame (plus the auxiliary head when enabled).
// Writes the final checkpoint and a CSV loss log into out_dir. Deterministic
// in the config; a non-finite loss dumps diagnostics and aborts.
TrainResult train(const TrainConfig& cfg, SegModel& model);
TrainResult train(const TrainConfig& cfg);

// Weights are stored by registry name; loading verifies that names and
// shapes match the model exactly.
void save_model(const std::string& path, SegModel& model, const nlohmann::json& meta);
nlohmann::json load_model(const std::string& path, SegModel& model);

struct EvalResult {
    ConfusionMatrix confusion;  // pooled over every frame of every clip
    double mean_iou = 0.0;
    double weighted_iou = 0.0;
    double mvc8 = 0.0;
    double mvc16 = 0.0;
    int64_t params = 0;
    int64_t flops = 0;  // one forward pass at dataset resolution
};

// Predicts every frame of every clip in the split and pools segmentation
// and temporal-consistency scores. Per-frame encoder features are computed
// once per clip and reused across the sliding temporal stacks, which is
// exactly equivalent to running the full model per frame.
EvalResult evaluate(SegModel& model, const std::string& root, const std::string& split,
                    int frame_stride);

}  // namespace evseg
