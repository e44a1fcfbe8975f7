#pragma once

#include <cstdint>
#include <vector>

#include "evseg/image_io.hpp"
#include "evseg/rng.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// Procedural clips of flat-shaded shapes drifting over a gradient background.
// Class ids: 0 background, 1 circle, 2 rectangle, 3 triangle, 4 ellipse.
constexpr int kSynthClasses = 5;

struct SynthConfig {
    int height = 64;
    int width = 64;
    int frames = 16;
    int min_shapes = 2;
    int max_shapes = 4;
    uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);

struct SynthShape {
    int class_id = 0;       // 1..4
    double cx = 0.0;        // center, pixel coordinates
    double cy = 0.0;
    double vx = 0.0;        // velocity, pixels per frame
    double vy = 0.0;
    double size = 0.0;      // radius / half extent
    double aspect = 1.0;    // secondary-axis scale for rectangle and ellipse
    double albedo[3] = {0.0, 0.0, 0.0};
};

struct SynthClip {
    std::vector<Tensor> frames;    // each (H, W, 3), values in [0, 1]
    std::vector<IntImage> masks;   // class ids per pixel
};

// True when the pixel center (px, py) lies inside the shape at its current
// position. Exposed for tests.
bool shape_contains(const SynthShape& s, double px, double py);

// Renders one clip. Deterministic in (cfg.seed, clip_index) only: shapes
// bounce off the image border so they stay in view for the whole clip.
SynthClip render_clip(const SynthConfig& cfg, int64_t clip_index);

}  // namespace evseg
