#pragma once

#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// One sensor event: pixel location, polarity (1 = brighter, 0 = darker),
// timestamp in seconds.
struct EventTuple {
    int x, y, p;
    double t;
};

// Events of one time window stacked into a grey-scale image:
// 0.5 everywhere nothing happened, toward 1 for net positive polarity,
// toward 0 for net negative.
struct EventFrame {
    Tensor image;  // (H,W,1) in [0,1]
    double window_start = 0.0, window_end = 0.0;
};

struct SimConfig {
    double contrast_threshold = 0.2;  // log-intensity units per event
    double eps = 1e-3;                // log stabilizer
    double delta_t = 1.0 / 30.0;      // stacking window, seconds
    int max_events_per_pixel = 4;     // normalization cap for the encoding
};

void validate(const SimConfig& cfg);

// Contrast-threshold simulation for one frame pair. Per pixel, luminance is
// the unweighted channel mean and d = log(L_curr+eps) - log(L_prev+eps);
// the pixel emits floor(|d|/threshold) events of one polarity, timestamps
// evenly spaced in (t0, t1]. The returned stream is sorted by timestamp
// (ties broken by row, then column).
std::vector<EventTuple> frames_to_events(const Tensor& prev, const Tensor& curr, double t0,
                                         double t1, const SimConfig& cfg);

// Stacks a stream into an event frame: pixel = 0.5 + 0.5 * clip(net / cap, -1, 1)
// where net counts p=1 as +1 and p=0 as -1 and cap = max_events_per_pixel.
EventFrame events_to_frame(const std::vector<EventTuple>& events, int h, int w,
                           const SimConfig& cfg);

}  // namespace evseg
