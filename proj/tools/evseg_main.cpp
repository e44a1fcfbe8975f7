#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evseg/ablation.hpp"
#include "evseg/config.hpp"
#include "evseg/lowlight.hpp"
#include "evseg/report.hpp"

namespace {

using namespace evseg;

std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s = "0" + s;
    return s;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        const size_t comma = s.find(',', start);
        out.push_back(s.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Clean render, per-clip degradation, and the event simulator's view of the
// degraded frames; shared by the preview subcommands.
struct PreviewClip {
    SynthClip clip;
    std::vector<Tensor> dark;
};

PreviewClip make_preview(const DatasetConfig& ds, int64_t clip_index) {
    SynthConfig sc = ds.synth;
    sc.seed = ds.seed;
    PreviewClip out;
    out.clip = render_clip(sc, clip_index);
    const LowLightParams params =
        sample_lowlight_params(Rng(ds.seed).derive("lowlight", clip_index).seed);
    for (const Tensor& f : out.clip.frames) out.dark.push_back(degrade(f, params));
    return out;
}

int cmd_synth(const nlohmann::json& cfg, int clip_index, const std::string& out_dir) {
    const DatasetConfig ds = dataset_config_from(cfg);
    const PreviewClip pv = make_preview(ds, clip_index);
    std::filesystem::create_directories(out_dir);
    for (int t = 0; t < ds.synth.frames; ++t) {
        const std::string stem = zero_pad(t, 3);
        save_image(out_dir + "/clean_" + stem + ".ppm", pv.clip.frames[static_cast<size_t>(t)]);
        save_image(out_dir + "/dark_" + stem + ".ppm", pv.dark[static_cast<size_t>(t)]);
        save_mask(out_dir + "/mask_" + stem + ".pgm", pv.clip.masks[static_cast<size_t>(t)]);
    }
    std::cout << "wrote " << ds.synth.frames << " frames of clip " << clip_index << " to "
              << out_dir << "\n";
    return 0;
}

int cmd_events(const nlohmann::json& cfg, int clip_index, const std::string& out_dir) {
    const DatasetConfig ds = dataset_config_from(cfg);
    const PreviewClip pv = make_preview(ds, clip_index);
    std::filesystem::create_directories(out_dir);

    std::ofstream stream(out_dir + "/stream.csv");
    stream << "t,x,y,p\n";
    int64_t total = 0;
    for (int t = 0; t < ds.synth.frames; ++t) {
        Tensor frame;
        if (t == 0) {
            frame = events_to_frame({}, ds.synth.height, ds.synth.width, ds.events).image;
        } else {
            const double t0 = (t - 1) * ds.events.delta_t;
            const double t1 = t * ds.events.delta_t;
            const auto events = frames_to_events(pv.dark[static_cast<size_t>(t) - 1],
                                                 pv.dark[static_cast<size_t>(t)], t0, t1,
                                                 ds.events);
            for (const EventTuple& e : events)
                stream << e.t << "," << e.x << "," << e.y << "," << e.p << "\n";
            total += static_cast<int64_t>(events.size());
            frame = events_to_frame(events, ds.synth.height, ds.synth.width, ds.events).image;
        }
        save_image(out_dir + "/events_" + zero_pad(t, 3) + ".pgm", frame);
    }
    std::cout << total << " events across " << ds.synth.frames - 1 << " frame pairs; output in "
              << out_dir << "\n";
    return 0;
}

int cmd_make_dataset(const nlohmann::json& cfg) {
    const DatasetConfig ds = dataset_config_from(cfg);
    const std::string root = dataset_root_from(cfg);
    build_dataset(ds, root);
    std::cout << "dataset at " << root << ": " << ds.train_clips << " train / " << ds.val_clips
              << " val clips, " << ds.synth.frames << " frames of " << ds.synth.width << "x"
              << ds.synth.height << "\n";
    return 0;
}

int cmd_train(const nlohmann::json& cfg) {
    const TrainConfig tc = train_config_from(cfg);
    const TrainResult res = train(tc);
    std::cout << "final loss " << res.losses.back() << " after " << tc.iters << " iterations\n";
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    std::cout << "loss log:   " << res.log_path << "\n";
    return 0;
}

void print_eval(const EvalResult& ev) {
    std::cout << "mean IoU      " << ev.mean_iou << "\n";
    std::cout << "weighted IoU  " << ev.weighted_iou << "\n";
    for (int k = 0; k < ev.confusion.num_classes; ++k)
        std::cout << "  class " << k << " IoU  " << ev.confusion.class_iou(k) << "\n";
    std::cout << "mVC8          " << ev.mvc8 << "\n";
    std::cout << "mVC16         " << ev.mvc16 << "\n";
    std::cout << "params        " << ev.params << "\n";
    std::cout << "GFLOPs        " << static_cast<double>(ev.flops) / 1e9 << "\n";
}

int cmd_eval(const nlohmann::json& cfg, const std::string& checkpoint, const std::string& split,
             const std::string& out_json) {
    const TrainConfig tc = train_config_from(cfg);
    SegModel model;
    Rng rng(0);  // overwritten by the checkpoint
    model.init(tc.model, rng);
    load_model(checkpoint, model);
    const EvalResult ev = evaluate(model, tc.dataset_root, split, tc.frame_stride);
    print_eval(ev);
    if (!out_json.empty()) {
        nlohmann::json j;
        j["mean_iou"] = ev.mean_iou;
        j["weighted_iou"] = ev.weighted_iou;
        j["mvc8"] = ev.mvc8;
        j["mvc16"] = ev.mvc16;
        j["params"] = ev.params;
        j["flops"] = ev.flops;
        nlohmann::json per_class = nlohmann::json::array();
        for (int k = 0; k < ev.confusion.num_classes; ++k) per_class.push_back(ev.confusion.class_iou(k));
        j["class_iou"] = per_class;
        std::ofstream out(out_json);
        out << j.dump(2) << "\n";
        std::cout << "metrics written to " << out_json << "\n";
    }
    return 0;
}

int cmd_ablate(const nlohmann::json& cfg, const std::string& arms_csv,
               const std::string& seeds_csv, const std::string& out_dir) {
    AblationConfig ac;
    ac.base = train_config_from(cfg);
    ac.out_dir = out_dir;
    ac.arms.clear();
    for (const std::string& name : split_csv(arms_csv)) ac.arms.push_back(parse_arrangement(name));
    ac.seeds.clear();
    for (const std::string& s : split_csv(seeds_csv)) ac.seeds.push_back(std::stoull(s));

    const AblationResult res = run_ablation(ac);
    std::cout << render_table(ablation_to_json(res));
    std::cout << "results: " << res.results_path << "\n";
    return 0;
}

int cmd_report(const std::string& results, const std::string& out_dir) {
    std::cout << write_report(results, out_dir);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-guided low-light video segmentation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // let subcommands accept the shared --config/--set

    std::vector<std::string> config_files;
    std::vector<std::string> overrides;
    app.add_option("--config", config_files, "JSON config layers, later files win")
        ->expected(-1);
    app.add_option("--set", overrides, "dotted override, e.g. train.lr=1e-4")->expected(-1);

    int clip_index = 0;
    std::string out_dir = "preview";
    CLI::App* synth = app.add_subcommand("synth", "render one clip to image files");
    synth->add_option("--clip", clip_index, "clip index");
    synth->add_option("--out", out_dir, "output directory");

    CLI::App* events = app.add_subcommand("events", "simulate events for one clip");
    events->add_option("--clip", clip_index, "clip index");
    events->add_option("--out", out_dir, "output directory");

    CLI::App* make_dataset = app.add_subcommand("make-dataset", "build the dataset on disk");

    CLI::App* train_cmd = app.add_subcommand("train", "train a model");

    std::string checkpoint;
    std::string split = "val";
    std::string eval_json;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint, "weights file")->required();
    eval_cmd->add_option("--split", split, "train or val");
    eval_cmd->add_option("--out", eval_json, "also write metrics as JSON");

    std::string arms = "no_fusion,channel_then_spatial";
    std::string seeds = "1,2,3";
    std::string ablate_out = "runs/ablation";
    CLI::App* ablate = app.add_subcommand("ablate", "compare fusion arrangements over seeds");
    ablate->add_option("--arms", arms, "comma-separated arrangement names");
    ablate->add_option("--seeds", seeds, "comma-separated seeds");
    ablate->add_option("--out", ablate_out, "output directory");

    std::string results;
    std::string report_out = "report";
    CLI::App* report = app.add_subcommand("report", "render tables and plots from results");
    report->add_option("--results", results, "results.json from an ablation")->required();
    report->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*report) return cmd_report(results, report_out);
        const nlohmann::json cfg = load_config(config_files, overrides);
        if (*synth) return cmd_synth(cfg, clip_index, out_dir);
        if (*events) return cmd_events(cfg, clip_index, out_dir);
        if (*make_dataset) return cmd_make_dataset(cfg);
        if (*train_cmd) return cmd_train(cfg);
        if (*eval_cmd) return cmd_eval(cfg, checkpoint, split, eval_json);
        if (*ablate) return cmd_ablate(cfg, arms, seeds, ablate_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
