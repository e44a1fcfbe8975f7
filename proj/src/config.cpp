#include "evseg/config.hpp"

#include <fstream>

#include "evseg/common.hpp"

namespace evseg {

namespace {

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
    if (a.is_number() && b.is_number()) return true;  // int vs float is fine
    return a.type() == b.type();
}

// Every key in `tree` must exist in `reference` with a compatible type.
void check_against(const nlohmann::json& reference, const nlohmann::json& tree,
                   const std::string& path) {
    for (const auto& [key, value] : tree.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        check_config(reference.contains(key), "unknown config key: " + where);
        const nlohmann::json& ref = reference.at(key);
        check_config(same_kind(ref, value), "config type mismatch at " + where);
        if (ref.is_object()) check_against(ref, value, where);
    }
}

std::array<int, 4> widths_from(const nlohmann::json& j, const std::string& key) {
    const auto& arr = j.at(key);
    check_config(arr.is_array() && arr.size() == 4, key + " needs exactly 4 entries");
    std::array<int, 4> out{};
    for (size_t i = 0; i < 4; ++i) out[i] = arr[i].get<int>();
    return out;
}

}  // namespace

nlohmann::json default_config() {
    const DatasetConfig ds;
    const TrainConfig tr;
    nlohmann::json j;
    j["dataset"] = {{"root", "data"},
                    {"height", ds.synth.height},
                    {"width", ds.synth.width},
                    {"frames", ds.synth.frames},
                    {"min_shapes", ds.synth.min_shapes},
                    {"max_shapes", ds.synth.max_shapes},
                    {"train_clips", ds.train_clips},
                    {"val_clips", ds.val_clips},
                    {"seed", ds.seed},
                    {"events",
                     {{"contrast_threshold", ds.events.contrast_threshold},
                      {"eps", ds.events.eps},
                      {"delta_t", ds.events.delta_t},
                      {"max_events_per_pixel", ds.events.max_events_per_pixel}}}};
    j["model"] = {{"num_classes", tr.model.num_classes},
                  {"frames", tr.model.frames},
                  {"feat_width", tr.model.feat_width},
                  {"image_widths", tr.model.image_widths},
                  {"event_widths", tr.model.event_widths},
                  {"arrangement", arrangement_name(tr.model.arrangement)},
                  {"pool_mode", pool_mode_name(tr.model.pool_mode)},
                  {"aux_head", tr.model.aux_head},
                  {"aux_weight", tr.model.aux_weight}};
    j["train"] = {{"iters", tr.iters},
                  {"lr", tr.lr},
                  {"poly_power", tr.poly_power},
                  {"weight_decay", tr.weight_decay},
                  {"frame_stride", tr.frame_stride},
                  {"log_every", tr.log_every},
                  {"seed", tr.seed},
                  {"out_dir", "runs/default"}};
    j["augment"] = {{"hflip", tr.augment.hflip},
                    {"gamma_jitter", tr.augment.gamma_jitter},
                    {"gain_jitter", tr.augment.gain_jitter}};
    return j;
}

void apply_override(nlohmann::json& cfg, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    check_config(eq != std::string::npos && eq > 0,
                 "override must look like key.path=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // bare words are strings

    nlohmann::json patch;
    nlohmann::json* node = &patch;
    size_t start = 0;
    while (true) {
        const size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        check_config(!part.empty(), "empty path segment in override: " + assignment);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
    check_against(cfg, patch, "");
    cfg.merge_patch(patch);
}

nlohmann::json load_config(const std::vector<std::string>& files,
                           const std::vector<std::string>& overrides) {
    nlohmann::json cfg = default_config();
    for (const std::string& file : files) {
        std::ifstream in(file);
        check_data(in.good(), "cannot open config file " + file);
        nlohmann::json layer;
        try {
            in >> layer;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad config file " + file + ": " + e.what());
        }
        check_against(cfg, layer, "");
        cfg.merge_patch(layer);
    }
    for (const std::string& o : overrides) apply_override(cfg, o);
    return cfg;
}

DatasetConfig dataset_config_from(const nlohmann::json& cfg) {
    const nlohmann::json& d = cfg.at("dataset");
    DatasetConfig out;
    out.synth.height = d.at("height").get<int>();
    out.synth.width = d.at("width").get<int>();
    out.synth.frames = d.at("frames").get<int>();
    out.synth.min_shapes = d.at("min_shapes").get<int>();
    out.synth.max_shapes = d.at("max_shapes").get<int>();
    out.train_clips = d.at("train_clips").get<int>();
    out.val_clips = d.at("val_clips").get<int>();
    out.seed = d.at("seed").get<uint64_t>();
    const nlohmann::json& e = d.at("events");
    out.events.contrast_threshold = e.at("contrast_threshold").get<double>();
    out.events.eps = e.at("eps").get<double>();
    out.events.delta_t = e.at("delta_t").get<double>();
    out.events.max_events_per_pixel = e.at("max_events_per_pixel").get<int>();
    return out;
}

ModelConfig model_config_from(const nlohmann::json& cfg) {
    const nlohmann::json& m = cfg.at("model");
    ModelConfig out;
    out.num_classes = m.at("num_classes").get<int>();
    out.frames = m.at("frames").get<int>();
    out.feat_width = m.at("feat_width").get<int>();
    out.image_widths = widths_from(m, "image_widths");
    out.event_widths = widths_from(m, "event_widths");
    out.arrangement = parse_arrangement(m.at("arrangement").get<std::string>());
    out.pool_mode = parse_pool_mode(m.at("pool_mode").get<std::string>());
    out.aux_head = m.at("aux_head").get<bool>();
    out.aux_weight = m.at("aux_weight").get<double>();
    return out;
}

TrainConfig train_config_from(const nlohmann::json& cfg) {
    const nlohmann::json& t = cfg.at("train");
    TrainConfig out;
    out.model = model_config_from(cfg);
    out.dataset_root = dataset_root_from(cfg);
    out.out_dir = t.at("out_dir").get<std::string>();
    out.iters = t.at("iters").get<int>();
    out.lr = t.at("lr").get<double>();
    out.poly_power = t.at("poly_power").get<double>();
    out.weight_decay = t.at("weight_decay").get<double>();
    out.frame_stride = t.at("frame_stride").get<int>();
    out.log_every = t.at("log_every").get<int>();
    out.seed = t.at("seed").get<uint64_t>();
    const nlohmann::json& a = cfg.at("augment");
    out.augment.hflip = a.at("hflip").get<bool>();
    out.augment.gamma_jitter = a.at("gamma_jitter").get<double>();
    out.augment.gain_jitter = a.at("gain_jitter").get<double>();
    return out;
}

std::string dataset_root_from(const nlohmann::json& cfg) {
    return cfg.at("dataset").at("root").get<std::string>();
}

}  // namespace evseg
