#pragma once

#include "evseg/image_io.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

struct XentResult {
    double loss = 0.0;
    int64_t counted = 0;
};

// Mean per-pixel softmax cross entropy of (H,W,K) logits against a label
// mask. Pixels labelled ignore_index contribute neither loss nor gradient.
// grad receives dloss/dlogits; with no counted pixels the loss is 0.
XentResult softmax_xent(const Tensor& logits, const IntImage& gt, int ignore_index, Tensor& grad);

}  // namespace evseg
