#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "evseg/common.hpp"

namespace evseg {

// Dense row-major double tensor. Axis conventions used throughout:
//   frames          (H, W, C)     C innermost
//   frame stacks    (T, H, W, C)  index 0 = current frame, increasing = older
//   matrices        (rows, cols)
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(count(shape)), fill);
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            check_shape(d >= 0, "negative dimension");
            n *= d;
        }
        return n;
    }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(v.size()); }
    bool empty() const { return v.empty(); }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    double& operator[](int64_t i) { return v[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return v[static_cast<size_t>(i)]; }

    double& at(int i, int j) {
        assert(rank() == 2);
        return v[static_cast<size_t>(i) * shape[1] + j];
    }
    double at(int i, int j) const { return const_cast<Tensor*>(this)->at(i, j); }

    double& at(int i, int j, int k) {
        assert(rank() == 3);
        return v[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k) const { return const_cast<Tensor*>(this)->at(i, j, k); }

    double& at(int i, int j, int k, int l) {
        assert(rank() == 4);
        return v[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double at(int i, int j, int k, int l) const { return const_cast<Tensor*>(this)->at(i, j, k, l); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    void add_(const Tensor& o) {
        check_shape(same_shape(o), "add_: shape mismatch");
        for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    }
    void scale_(double s) {
        for (double& x : v) x *= s;
    }

    // Same storage reinterpreted under a new shape of equal element count.
    Tensor with_shape(std::vector<int> s) const {
        check_shape(count(s) == size(), "with_shape: element count mismatch");
        Tensor t = *this;
        t.shape = std::move(s);
        return t;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_shape(a.same_shape(b), "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) {
        double d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

// Concatenates tensors along the innermost axis; all earlier dims must match.
inline Tensor concat_last(const std::vector<const Tensor*>& parts) {
    check_shape(!parts.empty(), "concat_last: no inputs");
    std::vector<int> shape = parts[0]->shape;
    int total = 0;
    for (const Tensor* part : parts) {
        check_shape(part->rank() == parts[0]->rank(), "concat_last: rank mismatch");
        for (int i = 0; i + 1 < part->rank(); ++i)
            check_shape(part->dim(i) == parts[0]->dim(i), "concat_last: outer dim mismatch");
        total += part->dim(part->rank() - 1);
    }
    shape.back() = total;
    Tensor out(shape);
    const int64_t rows = out.size() / total;
    int offset = 0;
    for (const Tensor* part : parts) {
        const int c = part->dim(part->rank() - 1);
        for (int64_t r = 0; r < rows; ++r)
            for (int i = 0; i < c; ++i) out[r * total + offset + i] = (*part)[r * c + i];
        offset += c;
    }
    return out;
}

// Extracts index i of the outermost axis as a contiguous copy.
inline Tensor slice_frame(const Tensor& t, int i) {
    check_shape(t.rank() >= 2, "slice_frame: rank >= 2 required");
    check_shape(0 <= i && i < t.dim(0), "slice_frame: index out of range");
    Tensor out(std::vector<int>(t.shape.begin() + 1, t.shape.end()));
    std::copy(t.v.begin() + i * out.size(), t.v.begin() + (i + 1) * out.size(), out.v.begin());
    return out;
}

// Extracts channels [from, to) of the innermost axis.
inline Tensor slice_last(const Tensor& t, int from, int to) {
    const int c = t.dim(t.rank() - 1);
    check_shape(0 <= from && from < to && to <= c, "slice_last: bad channel range");
    std::vector<int> shape = t.shape;
    shape.back() = to - from;
    Tensor out(shape);
    const int64_t rows = t.size() / c;
    for (int64_t r = 0; r < rows; ++r)
        for (int i = from; i < to; ++i) out[r * (to - from) + i - from] = t[r * c + i];
    return out;
}

}  // namespace evseg
