#include "evseg/layers.hpp"

#include <cmath>

namespace evseg {

void Conv2d::init(int kh, int kw, int cin, int cout, bool bias, int stride_, int groups_,
                  Rng& rng) {
    stride = stride_;
    groups = groups_;
    check_config(cin % groups == 0 && cout % groups == 0, "Conv2d: groups must divide channels");
    w.init({kh, kw, cin / groups, cout});
    const double bound = std::sqrt(6.0 / (static_cast<double>(kh) * kw * (cin / groups)));
    for (int64_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.uniform(-bound, bound);
    if (bias) b.init({cout});
}

Tensor Conv2d::forward(const Tensor& x, Ctx& ctx) const {
    ctx.x = x;
    return kernels::conv2d_forward(x, w.value, b.value, stride, groups);
}

Tensor Conv2d::backward(const Tensor& gy, const Ctx& ctx) {
    kernels::conv2d_backward_params(ctx.x, gy, w.grad, b.grad, stride, groups);
    return kernels::conv2d_backward_input(ctx.x.shape, w.value, gy, stride, groups);
}

int64_t Conv2d::macs(int out_h, int out_w) const {
    return static_cast<int64_t>(out_h) * out_w * w.value.size();
}

void Conv3d::init(int kt, int kh, int kw, int cin, int cout, bool bias, Rng& rng) {
    w.init({kt, kh, kw, cin, cout});
    const double bound = std::sqrt(6.0 / (static_cast<double>(kt) * kh * kw * cin));
    for (int64_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.uniform(-bound, bound);
    if (bias) b.init({cout});
}

Tensor Conv3d::forward(const Tensor& x, Ctx& ctx) const {
    ctx.x = x;
    return kernels::conv3d_forward(x, w.value, b.value);
}

Tensor Conv3d::backward(const Tensor& gy, const Ctx& ctx) {
    kernels::conv3d_backward_params(ctx.x, gy, w.grad, b.grad);
    return kernels::conv3d_backward_input(ctx.x.shape, w.value, gy);
}

int64_t Conv3d::macs(int t, int h, int w_) const {
    return static_cast<int64_t>(t) * h * w_ * w.value.size();
}

void ChannelNorm::init(int channels) {
    gamma.init({channels});
    beta.init({channels});
    gamma.value.fill(1.0);
}

Tensor ChannelNorm::forward(const Tensor& x, Ctx& ctx) const {
    check_shape(x.rank() == 3 && x.dim(2) == gamma.value.size(),
                "ChannelNorm: (H,W,C) input with C=" + std::to_string(gamma.value.size()) +
                    " required, got " + x.shape_str());
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int64_t n = static_cast<int64_t>(h) * w;

    std::vector<double> mean(static_cast<size_t>(c), 0.0);
    for (int64_t p = 0; p < n; ++p)
        for (int ci = 0; ci < c; ++ci) mean[static_cast<size_t>(ci)] += x[p * c + ci];
    for (int ci = 0; ci < c; ++ci) mean[static_cast<size_t>(ci)] /= static_cast<double>(n);

    std::vector<double> var(static_cast<size_t>(c), 0.0);
    for (int64_t p = 0; p < n; ++p)
        for (int ci = 0; ci < c; ++ci) {
            const double d = x[p * c + ci] - mean[static_cast<size_t>(ci)];
            var[static_cast<size_t>(ci)] += d * d;
        }

    ctx.inv_sd.assign(static_cast<size_t>(c), 0.0);
    for (int ci = 0; ci < c; ++ci)
        ctx.inv_sd[static_cast<size_t>(ci)] =
            1.0 / std::sqrt(var[static_cast<size_t>(ci)] / static_cast<double>(n) + eps);

    ctx.xhat = Tensor(x.shape);
    Tensor y(x.shape);
    for (int64_t p = 0; p < n; ++p)
        for (int ci = 0; ci < c; ++ci) {
            const double xh =
                (x[p * c + ci] - mean[static_cast<size_t>(ci)]) * ctx.inv_sd[static_cast<size_t>(ci)];
            ctx.xhat[p * c + ci] = xh;
            y[p * c + ci] = gamma.value[ci] * xh + beta.value[ci];
        }
    return y;
}

Tensor ChannelNorm::backward(const Tensor& gy, const Ctx& ctx) {
    check_shape(gy.same_shape(ctx.xhat), "ChannelNorm backward: shape mismatch");
    const int c = gy.dim(2);
    const int64_t n = gy.size() / c;

    std::vector<double> sum_gy(static_cast<size_t>(c), 0.0);
    std::vector<double> sum_gy_xhat(static_cast<size_t>(c), 0.0);
    for (int64_t p = 0; p < n; ++p)
        for (int ci = 0; ci < c; ++ci) {
            sum_gy[static_cast<size_t>(ci)] += gy[p * c + ci];
            sum_gy_xhat[static_cast<size_t>(ci)] += gy[p * c + ci] * ctx.xhat[p * c + ci];
        }
    for (int ci = 0; ci < c; ++ci) {
        beta.grad[ci] += sum_gy[static_cast<size_t>(ci)];
        gamma.grad[ci] += sum_gy_xhat[static_cast<size_t>(ci)];
    }

    Tensor gx(gy.shape);
    for (int64_t p = 0; p < n; ++p)
        for (int ci = 0; ci < c; ++ci) {
            const double m_gy = sum_gy[static_cast<size_t>(ci)] / static_cast<double>(n);
            const double m_gyx = sum_gy_xhat[static_cast<size_t>(ci)] / static_cast<double>(n);
            gx[p * c + ci] = gamma.value[ci] * ctx.inv_sd[static_cast<size_t>(ci)] *
                             (gy[p * c + ci] - m_gy - ctx.xhat[p * c + ci] * m_gyx);
        }
    return gx;
}

}  // namespace evseg
