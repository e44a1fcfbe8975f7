#include "evseg/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace evseg::kernels {

namespace {

struct Conv2dDims {
    int h, w, cin, kh, kw, cipg, cout, copg, ph, pw;
};

Conv2dDims conv2d_dims(const std::vector<int>& x_shape, const Tensor& w, int stride, int groups) {
    check_shape(x_shape.size() == 3, "conv2d: input must be (H,W,C)");
    check_shape(w.rank() == 4, "conv2d: weights must be (kh,kw,cin/groups,cout)");
    Conv2dDims d;
    d.h = x_shape[0];
    d.w = x_shape[1];
    d.cin = x_shape[2];
    d.kh = w.dim(0);
    d.kw = w.dim(1);
    d.cipg = w.dim(2);
    d.cout = w.dim(3);
    check_shape(d.kh % 2 == 1 && d.kw % 2 == 1, "conv2d: kernel dims must be odd");
    check_config(stride >= 1, "conv2d: stride must be >= 1");
    check_config(groups >= 1 && d.cin % groups == 0 && d.cout % groups == 0,
                 "conv2d: groups must divide cin and cout");
    check_shape(d.cipg == d.cin / groups, "conv2d: weight cin/groups mismatch");
    d.copg = d.cout / groups;
    d.ph = (d.kh - 1) / 2;
    d.pw = (d.kw - 1) / 2;
    check_shape(d.h % stride == 0 && d.w % stride == 0, "conv2d: H,W must be divisible by stride");
    return d;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int groups) {
    const Conv2dDims d = conv2d_dims(x.shape, w, stride, groups);
    if (!b.empty()) check_shape(b.size() == d.cout, "conv2d: bias size mismatch");
    const int ho = d.h / stride, wo = d.w / stride;
    Tensor y({ho, wo, d.cout});

    const double* xp = x.data();
    const double* wp = w.data();
    const double* bp = b.empty() ? nullptr : b.data();
    double* yp = y.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            double* acc = yp + (static_cast<int64_t>(oy) * wo + ox) * d.cout;
            if (bp) {
                for (int co = 0; co < d.cout; ++co) acc[co] = bp[co];
            } else {
                for (int co = 0; co < d.cout; ++co) acc[co] = 0.0;
            }
            for (int ky = 0; ky < d.kh; ++ky) {
                const int iy = oy * stride + ky - d.ph;
                if (iy < 0 || iy >= d.h) continue;
                for (int kx = 0; kx < d.kw; ++kx) {
                    const int ix = ox * stride + kx - d.pw;
                    if (ix < 0 || ix >= d.w) continue;
                    const double* xrow = xp + (static_cast<int64_t>(iy) * d.w + ix) * d.cin;
                    const double* wk = wp + (static_cast<int64_t>(ky) * d.kw + kx) * d.cipg * d.cout;
                    for (int g = 0; g < groups; ++g) {
                        double* accg = acc + g * d.copg;
                        for (int ciw = 0; ciw < d.cipg; ++ciw) {
                            const double xv = xrow[g * d.cipg + ciw];
                            const double* wrow = wk + static_cast<int64_t>(ciw) * d.cout + g * d.copg;
                            for (int j = 0; j < d.copg; ++j) accg[j] += xv * wrow[j];
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor conv2d_backward_input(const std::vector<int>& x_shape, const Tensor& w, const Tensor& gy,
                             int stride, int groups) {
    const Conv2dDims d = conv2d_dims(x_shape, w, stride, groups);
    const int ho = d.h / stride, wo = d.w / stride;
    check_shape(gy.rank() == 3 && gy.dim(0) == ho && gy.dim(1) == wo && gy.dim(2) == d.cout,
                "conv2d_backward_input: gy shape mismatch");
    Tensor gx({d.h, d.w, d.cin});
    const double* wp = w.data();
    const double* gp = gy.data();
    double* gxp = gx.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int iy = 0; iy < d.h; ++iy) {
        for (int ix = 0; ix < d.w; ++ix) {
            double* gacc = gxp + (static_cast<int64_t>(iy) * d.w + ix) * d.cin;
            for (int ci = 0; ci < d.cin; ++ci) gacc[ci] = 0.0;
            for (int ky = 0; ky < d.kh; ++ky) {
                const int oy_num = iy + d.ph - ky;
                if (oy_num < 0 || oy_num % stride != 0) continue;
                const int oy = oy_num / stride;
                if (oy >= ho) continue;
                for (int kx = 0; kx < d.kw; ++kx) {
                    const int ox_num = ix + d.pw - kx;
                    if (ox_num < 0 || ox_num % stride != 0) continue;
                    const int ox = ox_num / stride;
                    if (ox >= wo) continue;
                    const double* gyrow = gp + (static_cast<int64_t>(oy) * wo + ox) * d.cout;
                    const double* wk = wp + (static_cast<int64_t>(ky) * d.kw + kx) * d.cipg * d.cout;
                    for (int g = 0; g < groups; ++g) {
                        const double* gyg = gyrow + g * d.copg;
                        for (int ciw = 0; ciw < d.cipg; ++ciw) {
                            const double* wrow = wk + static_cast<int64_t>(ciw) * d.cout + g * d.copg;
                            double s = 0.0;
                            for (int j = 0; j < d.copg; ++j) s += wrow[j] * gyg[j];
                            gacc[g * d.cipg + ciw] += s;
                        }
                    }
                }
            }
        }
    }
    return gx;
}

void conv2d_backward_params(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor& gb, int stride,
                            int groups) {
    const Conv2dDims d = conv2d_dims(x.shape, gw, stride, groups);
    const int ho = d.h / stride, wo = d.w / stride;
    check_shape(gy.rank() == 3 && gy.dim(0) == ho && gy.dim(1) == wo && gy.dim(2) == d.cout,
                "conv2d_backward_params: gy shape mismatch");
    const double* xp = x.data();
    const double* gp = gy.data();
    double* gwp = gw.data();

// Disjoint (ky,kx,ciw) slices of gw per task; each slice accumulated in a
// fixed pixel order.
#pragma omp parallel for collapse(3) schedule(static)
    for (int ky = 0; ky < d.kh; ++ky) {
        for (int kx = 0; kx < d.kw; ++kx) {
            for (int ciw = 0; ciw < d.cipg; ++ciw) {
                double* gwrow0 =
                    gwp + ((static_cast<int64_t>(ky) * d.kw + kx) * d.cipg + ciw) * d.cout;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride + ky - d.ph;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride + kx - d.pw;
                        if (ix < 0 || ix >= d.w) continue;
                        const double* xrow = xp + (static_cast<int64_t>(iy) * d.w + ix) * d.cin;
                        const double* gyrow = gp + (static_cast<int64_t>(oy) * wo + ox) * d.cout;
                        for (int g = 0; g < groups; ++g) {
                            const double xv = xrow[g * d.cipg + ciw];
                            double* gwrow = gwrow0 + g * d.copg;
                            const double* gyg = gyrow + g * d.copg;
                            for (int j = 0; j < d.copg; ++j) gwrow[j] += xv * gyg[j];
                        }
                    }
                }
            }
        }
    }

    if (!gb.empty()) {
        check_shape(gb.size() == d.cout, "conv2d_backward_params: gb size mismatch");
        double* gbp = gb.data();
#pragma omp parallel for schedule(static)
        for (int co = 0; co < d.cout; ++co) {
            double s = 0.0;
            for (int64_t p = 0; p < static_cast<int64_t>(ho) * wo; ++p) s += gp[p * d.cout + co];
            gbp[co] += s;
        }
    }
}

namespace {

struct Conv3dDims {
    int t, h, w, cin, kt, kh, kw, cout, ph, pw;
};

Conv3dDims conv3d_dims(const std::vector<int>& x_shape, const Tensor& w) {
    check_shape(x_shape.size() == 4, "conv3d: input must be (T,H,W,C)");
    check_shape(w.rank() == 5, "conv3d: weights must be (kt,kh,kw,cin,cout)");
    Conv3dDims d;
    d.t = x_shape[0];
    d.h = x_shape[1];
    d.w = x_shape[2];
    d.cin = x_shape[3];
    d.kt = w.dim(0);
    d.kh = w.dim(1);
    d.kw = w.dim(2);
    check_shape(w.dim(3) == d.cin, "conv3d: weight cin mismatch");
    d.cout = w.dim(4);
    check_shape(d.kh % 2 == 1 && d.kw % 2 == 1, "conv3d: spatial kernel dims must be odd");
    check_shape(d.kt >= 1, "conv3d: kt must be >= 1");
    check_shape(d.t >= 2 || d.kt == 1, "conv3d: temporal kernel needs T >= 2");
    d.ph = (d.kh - 1) / 2;
    d.pw = (d.kw - 1) / 2;
    return d;
}

}  // namespace

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const Conv3dDims d = conv3d_dims(x.shape, w);
    if (!b.empty()) check_shape(b.size() == d.cout, "conv3d: bias size mismatch");
    Tensor y({d.t, d.h, d.w, d.cout});
    const double* xp = x.data();
    const double* wp = w.data();
    const double* bp = b.empty() ? nullptr : b.data();
    double* yp = y.data();
    const int64_t hw = static_cast<int64_t>(d.h) * d.w;

#pragma omp parallel for collapse(2) schedule(static)
    for (int ot = 0; ot < d.t; ++ot) {
        for (int oy = 0; oy < d.h; ++oy) {
            for (int ox = 0; ox < d.w; ++ox) {
                double* acc = yp + ((ot * hw) + static_cast<int64_t>(oy) * d.w + ox) * d.cout;
                if (bp) {
                    for (int co = 0; co < d.cout; ++co) acc[co] = bp[co];
                } else {
                    for (int co = 0; co < d.cout; ++co) acc[co] = 0.0;
                }
                for (int dt = 0; dt < d.kt; ++dt) {
                    const int it = std::min(ot + dt, d.t - 1);
                    for (int ky = 0; ky < d.kh; ++ky) {
                        const int iy = oy + ky - d.ph;
                        if (iy < 0 || iy >= d.h) continue;
                        for (int kx = 0; kx < d.kw; ++kx) {
                            const int ix = ox + kx - d.pw;
                            if (ix < 0 || ix >= d.w) continue;
                            const double* xrow =
                                xp + ((it * hw) + static_cast<int64_t>(iy) * d.w + ix) * d.cin;
                            const double* wk =
                                wp + ((static_cast<int64_t>(dt) * d.kh + ky) * d.kw + kx) * d.cin *
                                         d.cout;
                            for (int ci = 0; ci < d.cin; ++ci) {
                                const double xv = xrow[ci];
                                const double* wrow = wk + static_cast<int64_t>(ci) * d.cout;
                                for (int co = 0; co < d.cout; ++co) acc[co] += xv * wrow[co];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor conv3d_backward_input(const std::vector<int>& x_shape, const Tensor& w, const Tensor& gy) {
    const Conv3dDims d = conv3d_dims(x_shape, w);
    check_shape(gy.rank() == 4 && gy.dim(0) == d.t && gy.dim(1) == d.h && gy.dim(2) == d.w &&
                    gy.dim(3) == d.cout,
                "conv3d_backward_input: gy shape mismatch");
    Tensor gx({d.t, d.h, d.w, d.cin});
    const double* wp = w.data();
    const double* gp = gy.data();
    double* gxp = gx.data();
    const int64_t hw = static_cast<int64_t>(d.h) * d.w;

#pragma omp parallel for collapse(2) schedule(static)
    for (int it = 0; it < d.t; ++it) {
        for (int iy = 0; iy < d.h; ++iy) {
            for (int ix = 0; ix < d.w; ++ix) {
                double* gacc = gxp + ((it * hw) + static_cast<int64_t>(iy) * d.w + ix) * d.cin;
                for (int ci = 0; ci < d.cin; ++ci) gacc[ci] = 0.0;
                for (int dt = 0; dt < d.kt; ++dt) {
                    // Output frames whose clamped source min(ot+dt, T-1) == it.
                    int ot_lo = it - dt, ot_hi = it - dt;
                    if (it == d.t - 1) ot_hi = d.t - 1;
                    ot_lo = std::max(ot_lo, 0);
                    for (int ot = ot_lo; ot <= ot_hi; ++ot) {
                        for (int ky = 0; ky < d.kh; ++ky) {
                            const int oy = iy + d.ph - ky;
                            if (oy < 0 || oy >= d.h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int ox = ix + d.pw - kx;
                                if (ox < 0 || ox >= d.w) continue;
                                const double* gyrow =
                                    gp + ((ot * hw) + static_cast<int64_t>(oy) * d.w + ox) * d.cout;
                                const double* wk =
                                    wp + ((static_cast<int64_t>(dt) * d.kh + ky) * d.kw + kx) *
                                             d.cin * d.cout;
                                for (int ci = 0; ci < d.cin; ++ci) {
                                    const double* wrow = wk + static_cast<int64_t>(ci) * d.cout;
                                    double s = 0.0;
                                    for (int co = 0; co < d.cout; ++co) s += wrow[co] * gyrow[co];
                                    gacc[ci] += s;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return gx;
}

void conv3d_backward_params(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor& gb) {
    const Conv3dDims d = conv3d_dims(x.shape, gw);
    check_shape(gy.rank() == 4 && gy.dim(0) == d.t && gy.dim(1) == d.h && gy.dim(2) == d.w &&
                    gy.dim(3) == d.cout,
                "conv3d_backward_params: gy shape mismatch");
    const double* xp = x.data();
    const double* gp = gy.data();
    double* gwp = gw.data();
    const int64_t hw = static_cast<int64_t>(d.h) * d.w;

#pragma omp parallel for collapse(3) schedule(static)
    for (int dt = 0; dt < d.kt; ++dt) {
        for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
                double* gwk =
                    gwp + ((static_cast<int64_t>(dt) * d.kh + ky) * d.kw + kx) * d.cin * d.cout;
                for (int ot = 0; ot < d.t; ++ot) {
                    const int it = std::min(ot + dt, d.t - 1);
                    for (int oy = 0; oy < d.h; ++oy) {
                        const int iy = oy + ky - d.ph;
                        if (iy < 0 || iy >= d.h) continue;
                        for (int ox = 0; ox < d.w; ++ox) {
                            const int ix = ox + kx - d.pw;
                            if (ix < 0 || ix >= d.w) continue;
                            const double* xrow =
                                xp + ((it * hw) + static_cast<int64_t>(iy) * d.w + ix) * d.cin;
                            const double* gyrow =
                                gp + ((ot * hw) + static_cast<int64_t>(oy) * d.w + ox) * d.cout;
                            for (int ci = 0; ci < d.cin; ++ci) {
                                const double xv = xrow[ci];
                                double* gwrow = gwk + static_cast<int64_t>(ci) * d.cout;
                                for (int co = 0; co < d.cout; ++co) gwrow[co] += xv * gyrow[co];
                            }
                        }
                    }
                }
            }
        }
    }

    if (!gb.empty()) {
        check_shape(gb.size() == d.cout, "conv3d_backward_params: gb size mismatch");
        double* gbp = gb.data();
        const int64_t n = static_cast<int64_t>(d.t) * hw;
#pragma omp parallel for schedule(static)
        for (int co = 0; co < d.cout; ++co) {
            double s = 0.0;
            for (int64_t p = 0; p < n; ++p) s += gp[p * d.cout + co];
            gbp[co] += s;
        }
    }
}

Tensor matmul_nn(const Tensor& a, const Tensor& b) {
    check_shape(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), "matmul_nn: shape mismatch");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<int64_t>(i) * n;
        const double* arow = a.data() + static_cast<int64_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b.data() + static_cast<int64_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    check_shape(a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0), "matmul_tn: shape mismatch");
    const int k = a.dim(0), m = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<int64_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = a.data()[static_cast<int64_t>(kk) * m + i];
            const double* brow = b.data() + static_cast<int64_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    check_shape(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(1), "matmul_nt: shape mismatch");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Tensor c({m, n});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<int64_t>(i) * n;
        const double* arow = a.data() + static_cast<int64_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* brow = b.data() + static_cast<int64_t>(j) * k;
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
            crow[j] = s;
        }
    }
    return c;
}

void softmax_rows_inplace(Tensor& s) {
    check_shape(s.rank() == 2, "softmax_rows: rank-2 input required");
    const int m = s.dim(0), n = s.dim(1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* row = s.data() + static_cast<int64_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < n; ++j) row[j] *= inv;
    }
}

void channel_pools(const Tensor& x, Tensor& max_map, Tensor& avg_map, std::vector<int>& argmax) {
    check_shape(x.rank() == 3, "channel_pools: (H,W,C) input required");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    max_map = Tensor({h, w, 1});
    avg_map = Tensor({h, w, 1});
    argmax.assign(static_cast<size_t>(h) * w, 0);
    const double inv_c = 1.0 / c;
#pragma omp parallel for collapse(2) schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int xq = 0; xq < w; ++xq) {
            const double* row = x.data() + (static_cast<int64_t>(y) * w + xq) * c;
            double mx = row[0], sum = row[0];
            int arg = 0;
            for (int ci = 1; ci < c; ++ci) {
                sum += row[ci];
                if (row[ci] > mx) {
                    mx = row[ci];
                    arg = ci;
                }
            }
            max_map.at(y, xq, 0) = mx;
            avg_map.at(y, xq, 0) = sum * inv_c;
            argmax[static_cast<size_t>(y) * w + xq] = arg;
        }
    }
}

Tensor temporal_avgpool2(const Tensor& x) {
    check_shape(x.rank() == 4, "temporal_avgpool2: (T,H,W,C) input required");
    const int t = x.dim(0);
    const int64_t f = x.size() / t;
    Tensor y(x.shape);
#pragma omp parallel for schedule(static)
    for (int ot = 0; ot < t; ++ot) {
        const int it1 = std::min(ot + 1, t - 1);
        const double* a = x.data() + ot * f;
        const double* b = x.data() + it1 * f;
        double* out = y.data() + ot * f;
        for (int64_t i = 0; i < f; ++i) out[i] = 0.5 * (a[i] + b[i]);
    }
    return y;
}

Tensor temporal_avgpool2_backward(const Tensor& gy) {
    check_shape(gy.rank() == 4, "temporal_avgpool2_backward: (T,H,W,C) input required");
    const int t = gy.dim(0);
    const int64_t f = gy.size() / t;
    Tensor gx(gy.shape);
#pragma omp parallel for schedule(static)
    for (int it = 0; it < t; ++it) {
        double* out = gx.data() + it * f;
        // out[t] receives 0.5*gy[t], 0.5*gy[t-1]; the oldest frame also
        // receives its own replicated contribution 0.5*gy[t].
        for (int64_t i = 0; i < f; ++i) {
            double s = 0.5 * gy.data()[it * f + i];
            if (it > 0) s += 0.5 * gy.data()[(it - 1) * f + i];
            if (it == t - 1) s += 0.5 * gy.data()[it * f + i];
            out[i] = s;
        }
    }
    return gx;
}

Tensor global_avgpool2_broadcast(const Tensor& x) {
    check_shape(x.rank() == 4, "global_avgpool2: (T,H,W,C) input required");
    const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    Tensor y(x.shape);
#pragma omp parallel for schedule(static)
    for (int ot = 0; ot < t; ++ot) {
        const int it1 = std::min(ot + 1, t - 1);
        std::vector<double> mean(static_cast<size_t>(c), 0.0);
        for (int frame : {ot, it1}) {
            const double* base = x.data() + static_cast<int64_t>(frame) * hw * c;
            for (int64_t p = 0; p < hw; ++p)
                for (int ci = 0; ci < c; ++ci) mean[static_cast<size_t>(ci)] += base[p * c + ci];
        }
        const double inv = 1.0 / (2.0 * static_cast<double>(hw));
        for (int ci = 0; ci < c; ++ci) mean[static_cast<size_t>(ci)] *= inv;
        double* out = y.data() + static_cast<int64_t>(ot) * hw * c;
        for (int64_t p = 0; p < hw; ++p)
            for (int ci = 0; ci < c; ++ci) out[p * c + ci] = mean[static_cast<size_t>(ci)];
    }
    return y;
}

Tensor global_avgpool2_broadcast_backward(const Tensor& gy) {
    check_shape(gy.rank() == 4, "global_avgpool2_backward: (T,H,W,C) input required");
    const int t = gy.dim(0), h = gy.dim(1), w = gy.dim(2), c = gy.dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    Tensor gx(gy.shape);
    const double inv = 1.0 / (2.0 * static_cast<double>(hw));
    // Per output frame ot, every input pixel of frames {ot, min(ot+1,T-1)}
    // receives gy_sum[ot] * inv. Gather per input frame for determinism.
#pragma omp parallel for schedule(static)
    for (int it = 0; it < t; ++it) {
        std::vector<double> acc(static_cast<size_t>(c), 0.0);
        for (int ot = 0; ot < t; ++ot) {
            const int it1 = std::min(ot + 1, t - 1);
            int mult = (ot == it ? 1 : 0) + (it1 == it ? 1 : 0);
            if (mult == 0) continue;
            const double* base = gy.data() + static_cast<int64_t>(ot) * hw * c;
            std::vector<double> sum(static_cast<size_t>(c), 0.0);
            for (int64_t p = 0; p < hw; ++p)
                for (int ci = 0; ci < c; ++ci) sum[static_cast<size_t>(ci)] += base[p * c + ci];
            for (int ci = 0; ci < c; ++ci)
                acc[static_cast<size_t>(ci)] += mult * sum[static_cast<size_t>(ci)] * inv;
        }
        double* out = gx.data() + static_cast<int64_t>(it) * hw * c;
        for (int64_t p = 0; p < hw; ++p)
            for (int ci = 0; ci < c; ++ci) out[p * c + ci] = acc[static_cast<size_t>(ci)];
    }
    return gx;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    check_shape(x.rank() == 3, "upsample_nearest: (H,W,C) input required");
    check_config(factor >= 1, "upsample_nearest: factor must be >= 1");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    Tensor y({h * factor, w * factor, c});
#pragma omp parallel for collapse(2) schedule(static)
    for (int oy = 0; oy < h * factor; ++oy) {
        for (int ox = 0; ox < w * factor; ++ox) {
            const double* src = x.data() + (static_cast<int64_t>(oy / factor) * w + ox / factor) * c;
            double* dst = y.data() + (static_cast<int64_t>(oy) * w * factor + ox) * c;
            for (int ci = 0; ci < c; ++ci) dst[ci] = src[ci];
        }
    }
    return y;
}

Tensor upsample_nearest_backward(const Tensor& gy, int factor) {
    check_shape(gy.rank() == 3, "upsample_nearest_backward: (H,W,C) input required");
    const int ho = gy.dim(0), wo = gy.dim(1), c = gy.dim(2);
    check_shape(ho % factor == 0 && wo % factor == 0, "upsample_nearest_backward: size mismatch");
    const int h = ho / factor, w = wo / factor;
    Tensor gx({h, w, c});
#pragma omp parallel for collapse(2) schedule(static)
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            double* dst = gx.data() + (static_cast<int64_t>(iy) * w + ix) * c;
            for (int fy = 0; fy < factor; ++fy) {
                for (int fx = 0; fx < factor; ++fx) {
                    const double* src =
                        gy.data() +
                        (static_cast<int64_t>(iy * factor + fy) * wo + ix * factor + fx) * c;
                    for (int ci = 0; ci < c; ++ci) dst[ci] += src[ci];
                }
            }
        }
    }
    return gx;
}

namespace {

// Half-pixel-center source coordinate split into (lo index, hi weight).
inline void bilinear_coord(int o, int factor, int in_dim, int& i0, int& i1, double& w1) {
    const double src = (o + 0.5) / factor - 0.5;
    const double f = std::floor(src);
    i0 = static_cast<int>(f);
    i1 = i0 + 1;
    w1 = src - f;
    if (i0 < 0) {
        i0 = 0;
        i1 = 0;
        w1 = 0.0;
    } else if (i1 >= in_dim) {
        i0 = in_dim - 1;
        i1 = in_dim - 1;
        w1 = 0.0;
    }
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, int factor) {
    check_shape(x.rank() == 3, "upsample_bilinear: (H,W,C) input required");
    check_config(factor >= 1, "upsample_bilinear: factor must be >= 1");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int ho = h * factor, wo = w * factor;
    Tensor y({ho, wo, c});
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < ho; ++oy) {
        int y0, y1;
        double wy1;
        bilinear_coord(oy, factor, h, y0, y1, wy1);
        for (int ox = 0; ox < wo; ++ox) {
            int x0, x1;
            double wx1;
            bilinear_coord(ox, factor, w, x0, x1, wx1);
            const double* p00 = x.data() + (static_cast<int64_t>(y0) * w + x0) * c;
            const double* p01 = x.data() + (static_cast<int64_t>(y0) * w + x1) * c;
            const double* p10 = x.data() + (static_cast<int64_t>(y1) * w + x0) * c;
            const double* p11 = x.data() + (static_cast<int64_t>(y1) * w + x1) * c;
            double* dst = y.data() + (static_cast<int64_t>(oy) * wo + ox) * c;
            const double w00 = (1 - wy1) * (1 - wx1), w01 = (1 - wy1) * wx1;
            const double w10 = wy1 * (1 - wx1), w11 = wy1 * wx1;
            for (int ci = 0; ci < c; ++ci)
                dst[ci] = w00 * p00[ci] + w01 * p01[ci] + w10 * p10[ci] + w11 * p11[ci];
        }
    }
    return y;
}

Tensor upsample_bilinear_backward(const Tensor& gy, int factor, int in_h, int in_w) {
    check_shape(gy.rank() == 3, "upsample_bilinear_backward: (H,W,C) input required");
    const int ho = gy.dim(0), wo = gy.dim(1), c = gy.dim(2);
    check_shape(ho == in_h * factor && wo == in_w * factor,
                "upsample_bilinear_backward: size mismatch");
    Tensor gx({in_h, in_w, c});
    // Serial scatter; logits-sized tensors only.
    for (int oy = 0; oy < ho; ++oy) {
        int y0, y1;
        double wy1;
        bilinear_coord(oy, factor, in_h, y0, y1, wy1);
        for (int ox = 0; ox < wo; ++ox) {
            int x0, x1;
            double wx1;
            bilinear_coord(ox, factor, in_w, x0, x1, wx1);
            const double* src = gy.data() + (static_cast<int64_t>(oy) * wo + ox) * c;
            const double w00 = (1 - wy1) * (1 - wx1), w01 = (1 - wy1) * wx1;
            const double w10 = wy1 * (1 - wx1), w11 = wy1 * wx1;
            double* p00 = gx.data() + (static_cast<int64_t>(y0) * in_w + x0) * c;
            double* p01 = gx.data() + (static_cast<int64_t>(y0) * in_w + x1) * c;
            double* p10 = gx.data() + (static_cast<int64_t>(y1) * in_w + x0) * c;
            double* p11 = gx.data() + (static_cast<int64_t>(y1) * in_w + x1) * c;
            for (int ci = 0; ci < c; ++ci) {
                p00[ci] += w00 * src[ci];
                p01[ci] += w01 * src[ci];
                p10[ci] += w10 * src[ci];
                p11[ci] += w11 * src[ci];
            }
        }
    }
    return gx;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape);
    const int64_t n = x.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
    check_shape(x.same_shape(gy), "relu_backward: shape mismatch");
    Tensor gx(x.shape);
    const int64_t n = x.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

}  // namespace evseg::kernels
