#include <algorithm>
#include <cmath>

#include "evseg/kernels.hpp"

// Naive serial counterparts of the parallel kernels. Straight quadruple loops,
// no blocking, no pointer tricks. Used by tests to cross-check the fast path
// and by the benchmark tool as the baseline.

namespace evseg::ref {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int groups) {
    const int h = x.dim(0), wd = x.dim(1);
    const int kh = w.dim(0), kw = w.dim(1), cipg = w.dim(2), cout = w.dim(3);
    const int copg = cout / groups;
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const int ho = h / stride, wo = wd / stride;
    Tensor y({ho, wo, cout});
    for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
            for (int co = 0; co < cout; ++co) {
                const int g = co / copg;
                double acc = b.empty() ? 0.0 : b[co];
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int iy = oy * stride + ky - ph;
                        const int ix = ox * stride + kx - pw;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                        for (int ciw = 0; ciw < cipg; ++ciw)
                            acc += x.at(iy, ix, g * cipg + ciw) * w.at(ky, kx, ciw, co);
                    }
                y.at(oy, ox, co) = acc;
            }
    return y;
}

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const int t = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
    const int kt = w.dim(0), kh = w.dim(1), kw = w.dim(2), cout = w.dim(4);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    Tensor y({t, h, wd, cout});
    for (int ot = 0; ot < t; ++ot)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < wd; ++ox)
                for (int co = 0; co < cout; ++co) {
                    double acc = b.empty() ? 0.0 : b[co];
                    for (int dt = 0; dt < kt; ++dt)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int it = std::min(ot + dt, t - 1);
                                const int iy = oy + ky - ph;
                                const int ix = ox + kx - pw;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                for (int ci = 0; ci < cin; ++ci)
                                    acc += x.at(it, iy, ix, ci) * w[(((static_cast<int64_t>(dt) * kh + ky) * kw + kx) * cin + ci) * cout + co];
                            }
                    y.at(ot, oy, ox, co) = acc;
                }
    return y;
}

Tensor matmul_nn(const Tensor& a, const Tensor& b) {
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk) s += a.at(i, kk) * b.at(kk, j);
            c.at(i, j) = s;
        }
    return c;
}

void softmax_rows_inplace(Tensor& s) {
    const int m = s.dim(0), n = s.dim(1);
    for (int i = 0; i < m; ++i) {
        double mx = s.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, s.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += std::exp(s.at(i, j) - mx);
        for (int j = 0; j < n; ++j) s.at(i, j) = std::exp(s.at(i, j) - mx) / sum;
    }
}

void channel_pools(const Tensor& x, Tensor& max_map, Tensor& avg_map, std::vector<int>& argmax) {
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    max_map = Tensor({h, w, 1});
    avg_map = Tensor({h, w, 1});
    argmax.assign(static_cast<size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y)
        for (int xq = 0; xq < w; ++xq) {
            double mx = x.at(y, xq, 0), sum = 0.0;
            int arg = 0;
            for (int ci = 0; ci < c; ++ci) {
                sum += x.at(y, xq, ci);
                if (x.at(y, xq, ci) > mx) {
                    mx = x.at(y, xq, ci);
                    arg = ci;
                }
            }
            max_map.at(y, xq, 0) = mx;
            avg_map.at(y, xq, 0) = sum / c;
            argmax[static_cast<size_t>(y) * w + xq] = arg;
        }
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int ho = h * factor, wo = w * factor;
    Tensor y({ho, wo, c});
    for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
            for (int ci = 0; ci < c; ++ci) {
                const double sy = (oy + 0.5) / factor - 0.5;
                const double sx = (ox + 0.5) / factor - 0.5;
                const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
                const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
                const int y1 = std::min(y0 + 1, h - 1);
                const int x1 = std::min(x0 + 1, w - 1);
                double fy = sy - std::floor(sy);
                double fx = sx - std::floor(sx);
                if (sy < 0) fy = 0.0;
                if (sx < 0) fx = 0.0;
                if (std::floor(sy) >= h - 1) fy = 0.0;
                if (std::floor(sx) >= w - 1) fx = 0.0;
                y.at(oy, ox, ci) = (1 - fy) * (1 - fx) * x.at(y0, x0, ci) +
                                   (1 - fy) * fx * x.at(y0, x1, ci) +
                                   fy * (1 - fx) * x.at(y1, x0, ci) + fy * fx * x.at(y1, x1, ci);
            }
    return y;
}

}  // namespace evseg::ref
