#pragma once

#include <vector>

#include "evseg/layers.hpp"

namespace evseg {

// Polynomial decay from `base` to 0 over `total` steps; `iter` counts from 0.
double poly_lr(double base, int64_t iter, int64_t total, double power);

// Adam with decoupled weight decay. Moment buffers follow the registration
// order of the registry the optimizer was initialized with.
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 0.01;
    int64_t steps = 0;
    std::vector<Tensor> m, v;

    void init(const ParamRegistry& reg);
    // Applies one update from the accumulated gradients at learning rate lr.
    void step(ParamRegistry& reg, double lr);
};

}  // namespace evseg
