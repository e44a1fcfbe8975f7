#pragma once

#include <string>
#include <vector>

#include "evseg/kernels.hpp"
#include "evseg/rng.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// A trainable tensor with its gradient accumulator. Gradient shape always
// mirrors the value shape.
struct Param {
    Tensor value;
    Tensor grad;

    void init(std::vector<int> shape) {
        value = Tensor(shape);
        grad = Tensor(std::move(shape));
    }
    bool exists() const { return !value.empty(); }
};

// Ordered named view over every parameter of a model. Registration order is
// the canonical parameter order used by the optimizer and checkpoints.
struct ParamRegistry {
    std::vector<std::pair<std::string, Param*>> items;

    void add(const std::string& name, Param* p) {
        if (p->exists()) items.emplace_back(name, p);
    }

    int64_t total_count() const {
        int64_t n = 0;
        for (const auto& [name, p] : items) n += p->value.size();
        return n;
    }

    void zero_grads() {
        for (auto& [name, p] : items) p->grad.fill(0.0);
    }
};

// 2D convolution layer, odd kernel, "same" padding. He-uniform weight init
// over fan-in, zero bias init.
struct Conv2d {
    Param w, b;
    int stride = 1, groups = 1;

    void init(int kh, int kw, int cin, int cout, bool bias, int stride_, int groups_, Rng& rng);

    struct Ctx {
        Tensor x;
    };
    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix) {
        reg.add(prefix + ".w", &w);
        reg.add(prefix + ".b", &b);
    }

    // Multiply-accumulate count for one forward pass at the given output size.
    int64_t macs(int out_h, int out_w) const;
};

// 3D convolution layer over (T,H,W,C) stacks; see kernels::conv3d_forward
// for the padding contract.
struct Conv3d {
    Param w, b;

    void init(int kt, int kh, int kw, int cin, int cout, bool bias, Rng& rng);

    struct Ctx {
        Tensor x;
    };
    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix) {
        reg.add(prefix + ".w", &w);
        reg.add(prefix + ".b", &b);
    }

    int64_t macs(int t, int h, int w) const;
};

// Per-channel normalization over the spatial axes of one (H,W,C) frame with
// learned scale (init 1) and shift (init 0).
struct ChannelNorm {
    Param gamma, beta;
    double eps = 1e-5;

    void init(int channels);

    struct Ctx {
        Tensor xhat;                 // normalized input
        std::vector<double> inv_sd;  // per-channel 1/sqrt(var+eps)
    };
    Tensor forward(const Tensor& x, Ctx& ctx) const;
    Tensor backward(const Tensor& gy, const Ctx& ctx);

    void register_params(ParamRegistry& reg, const std::string& prefix) {
        reg.add(prefix + ".gamma", &gamma);
        reg.add(prefix + ".beta", &beta);
    }
};

struct Relu {
    struct Ctx {
        Tensor x;
    };
    Tensor forward(const Tensor& x, Ctx& ctx) const {
        ctx.x = x;
        return kernels::relu(x);
    }
    Tensor backward(const Tensor& gy, const Ctx& ctx) const {
        return kernels::relu_backward(ctx.x, gy);
    }
};

}  // namespace evseg
