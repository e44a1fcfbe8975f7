#include "evseg/ablation.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

namespace evseg {

namespace {

nlohmann::json run_to_json(const AblationRun& run) {
    nlohmann::json j;
    j["arrangement"] = arrangement_name(run.arrangement);
    j["seed"] = run.seed;
    j["final_loss"] = run.final_loss;
    j["seconds"] = run.seconds;
    j["run_dir"] = run.run_dir;
    j["mean_iou"] = run.eval.mean_iou;
    j["weighted_iou"] = run.eval.weighted_iou;
    j["mvc8"] = run.eval.mvc8;
    j["mvc16"] = run.eval.mvc16;
    j["params"] = run.eval.params;
    j["flops"] = run.eval.flops;
    nlohmann::json per_class = nlohmann::json::array();
    for (int k = 0; k < run.eval.confusion.num_classes; ++k)
        per_class.push_back(run.eval.confusion.class_iou(k));
    j["class_iou"] = per_class;
    return j;
}

}  // namespace

void validate(const AblationConfig& cfg) {
    validate(cfg.base);
    check_config(!cfg.arms.empty(), "ablation: at least one arm required");
    check_config(!cfg.seeds.empty(), "ablation: at least one seed required");
    check_config(!cfg.out_dir.empty(), "ablation: out_dir required");
}

AblationResult run_ablation(const AblationConfig& cfg) {
    validate(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    AblationResult result;
    for (FusionArrangement arm : cfg.arms) {
        for (uint64_t seed : cfg.seeds) {
            TrainConfig tc = cfg.base;
            tc.model.arrangement = arm;
            tc.seed = seed;
            tc.out_dir =
                cfg.out_dir + "/" + arrangement_name(arm) + "_seed" + std::to_string(seed);

            const auto start = std::chrono::steady_clock::now();
            SegModel model;
            const TrainResult tr = train(tc, model);
            AblationRun run;
            run.arrangement = arm;
            run.seed = seed;
            run.final_loss = tr.losses.back();
            run.run_dir = tc.out_dir;
            run.eval = evaluate(model, tc.dataset_root, "val", tc.frame_stride);
            run.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            result.runs.push_back(std::move(run));
        }
    }

    result.results_path = cfg.out_dir + "/results.json";
    std::ofstream out(result.results_path);
    check_data(out.good(), "cannot write " + result.results_path);
    out << ablation_to_json(result).dump(2) << "\n";
    return result;
}

nlohmann::json ablation_to_json(const AblationResult& r) {
    nlohmann::json j;
    j["runs"] = nlohmann::json::array();
    for (const AblationRun& run : r.runs) j["runs"].push_back(run_to_json(run));
    return j;
}

bool arrangement_dominates(const AblationResult& r, FusionArrangement better,
                           FusionArrangement worse) {
    std::map<uint64_t, const AblationRun*> b, w;
    for (const AblationRun& run : r.runs) {
        if (run.arrangement == better) b[run.seed] = &run;
        if (run.arrangement == worse) w[run.seed] = &run;
    }
    bool compared = false;
    for (const auto& [seed, run] : b) {
        const auto it = w.find(seed);
        if (it == w.end()) continue;
        compared = true;
        if (!(run->eval.mean_iou > it->second->eval.mean_iou)) return false;
        if (!(run->eval.mvc8 > it->second->eval.mvc8)) return false;
    }
    return compared;
}

}  // namespace evseg
