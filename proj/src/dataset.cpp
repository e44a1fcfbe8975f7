#include "evseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evseg/common.hpp"
#include "evseg/lowlight.hpp"

namespace evseg {

namespace {

namespace fs = std::filesystem;

std::string zero_pad(int64_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s = "0" + s;
    return s;
}

std::string clip_dir(const std::string& root, const std::string& split,
                     int index) {
    return root + "/" + split + "/clip_" + zero_pad(index, 4);
}

// Event frames for one clip, already degraded. Frame 0 gets the empty
// encoding, frame t the stream between frames t-1 and t.
std::vector<Tensor> clip_event_frames(const std::vector<Tensor>& dark,
                                      const SimConfig& cfg) {
    const int h = dark[0].dim(0);
    const int w = dark[0].dim(1);
    std::vector<Tensor> out;
    out.push_back(events_to_frame({}, h, w, cfg).image);
    for (size_t t = 1; t < dark.size(); ++t) {
        const double t0 = (static_cast<double>(t) - 1.0) * cfg.delta_t;
        const double t1 = static_cast<double>(t) * cfg.delta_t;
        const auto events = frames_to_events(dark[t - 1], dark[t], t0, t1, cfg);
        out.push_back(events_to_frame(events, h, w, cfg).image);
    }
    return out;
}

void write_clip(const DatasetConfig& cfg, const std::string& root,
                const std::string& split, int index, int64_t global_index) {
    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;  // one master seed controls the whole dataset
    const SynthClip clip = render_clip(sc, global_index);

    const LowLightParams params =
        sample_lowlight_params(Rng(cfg.seed).derive("lowlight", global_index).seed);
    std::vector<Tensor> dark;
    for (const Tensor& f : clip.frames) dark.push_back(degrade(f, params));
    const std::vector<Tensor> events = clip_event_frames(dark, cfg.events);

    const std::string dir = clip_dir(root, split, index);
    fs::create_directories(dir);
    for (int t = 0; t < cfg.synth.frames; ++t) {
        const std::string stem = zero_pad(t, 3);
        save_image(dir + "/frame_" + stem + ".ppm", dark[t]);
        save_mask(dir + "/mask_" + stem + ".pgm", clip.masks[t]);
        save_image(dir + "/events_" + stem + ".pgm", events[t]);
    }
}

}  // namespace

void validate(const DatasetConfig& cfg) {
    validate(cfg.synth);
    validate(cfg.events);
    check_config(cfg.train_clips > 0, "train_clips must be positive");
    check_config(cfg.val_clips > 0, "val_clips must be positive");
}

void build_dataset(const DatasetConfig& cfg, const std::string& root) {
    validate(cfg);
    fs::create_directories(root);
    for (int i = 0; i < cfg.train_clips; ++i)
        write_clip(cfg, root, "train", i, i);
    for (int i = 0; i < cfg.val_clips; ++i)
        write_clip(cfg, root, "val", i, cfg.train_clips + i);

    nlohmann::json manifest;
    manifest["height"] = cfg.synth.height;
    manifest["width"] = cfg.synth.width;
    manifest["frames"] = cfg.synth.frames;
    manifest["num_classes"] = kSynthClasses;
    manifest["train_clips"] = cfg.train_clips;
    manifest["val_clips"] = cfg.val_clips;
    manifest["seed"] = cfg.seed;
    std::ofstream out(root + "/manifest.json");
    check_data(out.good(), "cannot write " + root + "/manifest.json");
    out << manifest.dump(2) << "\n";
}

DatasetInfo read_manifest(const std::string& root) {
    std::ifstream in(root + "/manifest.json");
    check_data(in.good(), "cannot open " + root + "/manifest.json");
    DatasetInfo info;
    try {
        nlohmann::json j;
        in >> j;
        info.height = j.at("height").get<int>();
        info.width = j.at("width").get<int>();
        info.frames = j.at("frames").get<int>();
        info.num_classes = j.at("num_classes").get<int>();
        info.train_clips = j.at("train_clips").get<int>();
        info.val_clips = j.at("val_clips").get<int>();
        info.seed = j.at("seed").get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad manifest: ") + e.what());
    }
    return info;
}

LoadedClip load_clip(const std::string& root, const std::string& split,
                     int index) {
    const DatasetInfo info = read_manifest(root);
    const int count = split == "train" ? info.train_clips : info.val_clips;
    check_data(split == "train" || split == "val", "unknown split " + split);
    check_data(index >= 0 && index < count,
               "clip index " + std::to_string(index) + " out of range");
    const std::string dir = clip_dir(root, split, index);
    LoadedClip clip;
    for (int t = 0; t < info.frames; ++t) {
        const std::string stem = zero_pad(t, 3);
        clip.frames.push_back(load_image(dir + "/frame_" + stem + ".ppm"));
        clip.events.push_back(load_image(dir + "/events_" + stem + ".pgm"));
        clip.masks.push_back(load_mask(dir + "/mask_" + stem + ".pgm"));
    }
    return clip;
}

Sample make_sample(const LoadedClip& clip, int t, int num_frames,
                   int frame_stride) {
    check_config(num_frames >= 1, "num_frames must be at least 1");
    check_config(frame_stride >= 1, "frame_stride must be at least 1");
    const int len = static_cast<int>(clip.frames.size());
    check_shape(len > 0, "empty clip");
    check_shape(t >= 0 && t < len, "frame index out of range");
    const int h = clip.frames[0].dim(0);
    const int w = clip.frames[0].dim(1);

    Sample s;
    s.images = Tensor({num_frames, h, w, 3});
    s.events = Tensor({num_frames, h, w, 1});
    for (int k = 0; k < num_frames; ++k) {
        const int src = std::max(0, t - k * frame_stride);
        std::copy(clip.frames[src].data(),
                  clip.frames[src].data() + clip.frames[src].size(),
                  s.images.data() + static_cast<int64_t>(k) * h * w * 3);
        std::copy(clip.events[src].data(),
                  clip.events[src].data() + clip.events[src].size(),
                  s.events.data() + static_cast<int64_t>(k) * h * w);
    }
    s.mask = clip.masks[t];
    return s;
}

void augment_sample(Sample& s, const AugmentConfig& cfg, Rng& rng) {
    // Draw every jitter unconditionally so the stream does not depend on
    // which options are enabled.
    const bool flip = rng.coin();
    const double gamma_u = rng.uniform(-cfg.gamma_jitter, cfg.gamma_jitter);
    const double gain_u = rng.uniform(-cfg.gain_jitter, cfg.gain_jitter);

    const int t = s.images.dim(0);
    const int h = s.images.dim(1);
    const int w = s.images.dim(2);
    if (cfg.hflip && flip) {
        auto flip_tensor = [&](Tensor& x) {
            const int c = x.dim(3);
            for (int f = 0; f < t; ++f)
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w / 2; ++xx)
                        for (int ch = 0; ch < c; ++ch)
                            std::swap(x.at(f, y, xx, ch),
                                      x.at(f, y, w - 1 - xx, ch));
        };
        flip_tensor(s.images);
        flip_tensor(s.events);
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w / 2; ++xx)
                std::swap(s.mask.at(y, xx), s.mask.at(y, w - 1 - xx));
    }

    const double exponent = 1.0 + gamma_u;
    const double gain = 1.0 + gain_u;
    for (int64_t i = 0; i < s.images.size(); ++i) {
        double v = std::pow(s.images.data()[i], exponent) * gain;
        s.images.data()[i] = std::clamp(v, 0.0, 1.0);
    }
}

}  // namespace evseg
