#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evseg/event_sim.hpp"
#include "evseg/image_io.hpp"
#include "evseg/rng.hpp"
#include "evseg/synth.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// On-disk segmentation dataset:
//   root/manifest.json
//   root/{train,val}/clip_0000/frame_000.ppm   degraded camera frame
//                             /mask_000.pgm    class ids
//                             /events_000.pgm  stacked event frame
// Frames are rendered clean, degraded with per-clip low-light parameters,
// and only then run through the event simulator, so events carry the same
// noise floor a real sensor would see. Event frame t covers the interval
// between frames t-1 and t; frame 0 has no predecessor and stores the empty
// encoding (0.5 everywhere).
struct DatasetConfig {
    SynthConfig synth;
    SimConfig events;
    int train_clips = 100;
    int val_clips = 20;
    uint64_t seed = 1;
};

void validate(const DatasetConfig& cfg);

struct DatasetInfo {
    int height = 0;
    int width = 0;
    int frames = 0;
    int num_classes = 0;
    int train_clips = 0;
    int val_clips = 0;
    uint64_t seed = 0;
};

// Renders every clip and writes the directory tree. Existing files are
// overwritten; output is byte-identical for identical configs.
void build_dataset(const DatasetConfig& cfg, const std::string& root);

DatasetInfo read_manifest(const std::string& root);

struct LoadedClip {
    std::vector<Tensor> frames;   // (H,W,3) in [0,1]
    std::vector<Tensor> events;   // (H,W,1) in [0,1]
    std::vector<IntImage> masks;  // class ids
};

LoadedClip load_clip(const std::string& root, const std::string& split,
                     int index);

// One training example: the current frame plus a few past frames. Index 0 is
// the current frame and later indices look further back, matching the
// temporal modules. Offsets are t, t-stride, t-2*stride, ... clamped to 0.
struct Sample {
    Tensor images;  // (T,H,W,3)
    Tensor events;  // (T,H,W,1)
    IntImage mask;  // ground truth for the current frame
};

Sample make_sample(const LoadedClip& clip, int t, int num_frames,
                   int frame_stride);

// Training-time augmentation. The horizontal flip is applied consistently to
// images, events, and mask; the photometric jitters touch only the images so
// the event stream stays faithful to the motion that produced it.
struct AugmentConfig {
    bool hflip = true;
    double gamma_jitter = 0.15;  // exponent perturbation, x^(1+u)
    double gain_jitter = 0.1;    // multiplicative gain, clamped to [0,1]
};

void augment_sample(Sample& s, const AugmentConfig& cfg, Rng& rng);

}  // namespace evseg
