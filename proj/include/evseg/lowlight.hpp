#pragma once

#include "evseg/tensor.hpp"

namespace evseg {

// Degradation parameters for out = beta * (alpha * x)^gamma, drawn once per
// clip so appearance stays coherent across its frames.
struct LowLightParams {
    double alpha;  // [0.9, 1.0]
    double beta;   // [0.5, 1.0]
    double gamma;  // [2.0, 3.5]
    uint64_t seed;
};

// Draws (alpha, beta, gamma) uniformly from their closed ranges,
// deterministically in the seed.
LowLightParams sample_lowlight_params(uint64_t seed);

// Applies the degradation elementwise. Input must lie in [0,1]; the output
// stays in [0,1] whenever alpha, beta <= 1.
Tensor degrade(const Tensor& frame, const LowLightParams& params);

}  // namespace evseg
