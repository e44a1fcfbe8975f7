#pragma once

#include <string>
#include <vector>

#include "evseg/train.hpp"

namespace evseg {

// Controlled comparison of fusion arrangements: every arm trains with the
// same recipe and dataset across the same set of seeds, differing only in
// the arrangement (and the seed within an arm).
struct AblationConfig {
    TrainConfig base;
    std::vector<FusionArrangement> arms = {FusionArrangement::no_fusion,
                                           FusionArrangement::channel_then_spatial};
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::string out_dir;
};

void validate(const AblationConfig& cfg);

struct AblationRun {
    FusionArrangement arrangement = FusionArrangement::no_fusion;
    uint64_t seed = 0;
    double final_loss = 0.0;
    double seconds = 0.0;
    std::string run_dir;
    EvalResult eval;  // validation split
};

struct AblationResult {
    std::vector<AblationRun> runs;
    std::string results_path;  // JSON summary
};

// Trains and evaluates every (arm, seed) pair sequentially and writes
// results.json plus one run directory per pair under out_dir.
AblationResult run_ablation(const AblationConfig& cfg);

nlohmann::json ablation_to_json(const AblationResult& r);

// True when `better` strictly beats `worse` on both mean IoU and 8-frame
// consistency for every seed the two arms share.
bool arrangement_dominates(const AblationResult& r, FusionArrangement better,
                           FusionArrangement worse);

}  // namespace evseg
