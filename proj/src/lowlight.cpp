#include "evseg/lowlight.hpp"

#include <cmath>

#include "evseg/rng.hpp"

namespace evseg {

LowLightParams sample_lowlight_params(uint64_t seed) {
    Rng rng(seed);
    LowLightParams p;
    p.alpha = rng.uniform(0.9, 1.0);
    p.beta = rng.uniform(0.5, 1.0);
    p.gamma = rng.uniform(2.0, 3.5);
    p.seed = seed;
    return p;
}

Tensor degrade(const Tensor& frame, const LowLightParams& params) {
    Tensor out(frame.shape);
    for (int64_t i = 0; i < frame.size(); ++i) {
        const double x = frame[i];
        check_data(x >= 0.0 && x <= 1.0,
                   "pixel value " + std::to_string(x) + " outside [0,1]; normalize frames first");
        out[i] = params.beta * std::pow(params.alpha * x, params.gamma);
    }
    return out;
}

}  // namespace evseg
