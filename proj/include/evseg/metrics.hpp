#pragma once

#include <string>
#include <vector>

#include "evseg/image_io.hpp"

namespace evseg {

// Per-class-pair pixel counts between ground-truth and predicted masks.
// Rows index the ground-truth class, columns the predicted class. Pixels
// whose ground-truth label equals ignore_index are not counted.
struct ConfusionMatrix {
    int num_classes = 0;
    int ignore_index = 255;
    std::vector<int64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int num_classes_, int ignore_index_ = 255);

    void update(const IntImage& gt, const IntImage& pred);
    void merge(const ConfusionMatrix& o);

    int64_t at(int g, int p) const {
        return counts[static_cast<size_t>(g) * num_classes + p];
    }
    int64_t total() const;

    // Intersection over union of one class; NaN when the union is empty.
    double class_iou(int k) const;
    // Mean IoU over classes with a non-empty union; NaN when there are none.
    double mean_iou() const;
    // IoU averaged with each class weighted by its ground-truth pixel share;
    // NaN when no pixels were counted.
    double weighted_iou() const;
};

// Which mask sequence defines the set of temporally consistent pixels.
enum class VcDenominator { gt, pred };

VcDenominator parse_vc_denominator(const std::string& name);
std::string vc_denominator_name(VcDenominator d);

// Pixel counts for one temporal window: `consistent` pixels hold the same
// label in every frame of the denominator sequence; `agree` pixels are
// consistent in both sequences with matching labels. Pixels with an
// ignore_index ground-truth label anywhere in the window are skipped.
struct VcWindowCounts {
    int64_t agree = 0;
    int64_t consistent = 0;
};

VcWindowCounts vc_window_counts(const std::vector<IntImage>& gt,
                                const std::vector<IntImage>& pred, int begin, int len,
                                VcDenominator denominator, int ignore_index);

// agree/consistent, defined as 1 when no pixel is consistent.
double vc_ratio(const VcWindowCounts& c);

// Consistency of a whole mask sequence treated as a single window.
double video_consistency(const std::vector<IntImage>& gt, const std::vector<IntImage>& pred,
                         VcDenominator denominator = VcDenominator::gt, int ignore_index = 255);

// Mean consistency over every stride-1 window of a fixed length, pooled
// across clips. Clips shorter than the window are skipped and counted.
struct MeanVc {
    int window_len = 8;
    VcDenominator denominator = VcDenominator::gt;
    int ignore_index = 255;

    double sum = 0.0;
    int64_t windows = 0;
    int64_t short_clips = 0;

    void add_clip(const std::vector<IntImage>& gt, const std::vector<IntImage>& pred);
    // NaN when no window was long enough.
    double mean() const;
};

}  // namespace evseg
