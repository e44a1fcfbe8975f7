#pragma once

#include <string>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// Integer-valued raster used for segmentation masks (class ids per pixel).
struct IntImage {
    int h = 0, w = 0;
    std::vector<int32_t> v;

    IntImage() = default;
    IntImage(int h_, int w_, int32_t fill = 0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    int32_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    int32_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    int64_t size() const { return static_cast<int64_t>(v.size()); }
};

// 8-bit binary PNM files. Greyscale images load as (H,W,1), color as (H,W,3),
// both scaled to [0,1] by /255. Saving rounds to the nearest byte and clamps.
Tensor load_image(const std::string& path);
void save_image(const std::string& path, const Tensor& img);

// Masks store raw class ids (0..255) in greyscale PNM files, no scaling.
IntImage load_mask(const std::string& path);
void save_mask(const std::string& path, const IntImage& mask);

}  // namespace evseg
