#pragma once

#include <vector>

#include "evseg/tensor.hpp"

// OpenMP-parallel kernels. Every kernel parallelizes over independent output
// elements and keeps the per-element reduction order fixed, so results do not
// depend on the number of threads. Serial counterparts live in evseg::ref.
namespace evseg::kernels {

// 2D convolution on (H,W,Cin) frames, channels-last.
// Weights: (kh,kw,cin_per_group,cout). Odd kernels, "same" padding; with
// stride s the output is (H/s, W/s) for H,W divisible by s.
// Bias may be an empty tensor. Grouped convolution: groups must divide both
// cin and cout; groups==cin with cin==cout gives a depthwise layer.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int groups);
Tensor conv2d_backward_input(const std::vector<int>& x_shape, const Tensor& w, const Tensor& gy,
                             int stride, int groups);
// Accumulates into gw/gb (callers zero them once per step).
void conv2d_backward_params(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor& gb, int stride,
                            int groups);

// 3D convolution on (T,H,W,Cin) stacks, stride 1.
// Weights: (kt,kh,kw,cin,cout). Spatial padding is zero "same"; the temporal
// axis is same-padded by replicating the oldest frame (index T-1), matching
// the frame-stack orientation where index 0 is the current frame.
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv3d_backward_input(const std::vector<int>& x_shape, const Tensor& w, const Tensor& gy);
void conv3d_backward_params(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor& gb);

// Matrix products on rank-2 tensors.
Tensor matmul_nn(const Tensor& a, const Tensor& b);  // (m,k)x(k,n)
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // (k,m)^T x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k)^T

// Row-wise softmax of a (m,n) matrix, numerically stabilized.
void softmax_rows_inplace(Tensor& s);

// Channel-axis max/avg pooling of an (H,W,C) tensor into (H,W,1) maps.
// argmax records the winning channel per pixel (first index wins ties).
void channel_pools(const Tensor& x, Tensor& max_map, Tensor& avg_map, std::vector<int>& argmax);

// Temporal average pooling with kernel (2,1,1), stride 1, replicate padding
// at the oldest frame: out[t] = (x[t] + x[min(t+1,T-1)]) / 2.
Tensor temporal_avgpool2(const Tensor& x);
Tensor temporal_avgpool2_backward(const Tensor& gy);

// Alternative pooling: average over (2,H,W) and broadcast back over H,W.
Tensor global_avgpool2_broadcast(const Tensor& x);
Tensor global_avgpool2_broadcast_backward(const Tensor& gy);

// Nearest-neighbor upsampling of (h,w,c) by integer factor f.
Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Tensor& gy, int factor);

// Bilinear upsampling by integer factor (half-pixel centers).
Tensor upsample_bilinear(const Tensor& x, int factor);
Tensor upsample_bilinear_backward(const Tensor& gy, int factor, int in_h, int in_w);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& gy);

}  // namespace evseg::kernels

// Plain serial reference implementations used by tests and the benchmark.
namespace evseg::ref {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int groups);
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor matmul_nn(const Tensor& a, const Tensor& b);
void softmax_rows_inplace(Tensor& s);
void channel_pools(const Tensor& x, Tensor& max_map, Tensor& avg_map, std::vector<int>& argmax);
Tensor upsample_bilinear(const Tensor& x, int factor);

}  // namespace evseg::ref
