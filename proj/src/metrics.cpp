#include "evseg/metrics.hpp"

#include <cmath>
#include <limits>

namespace evseg {

namespace {

constexpr double kNoData = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes_, int ignore_index_)
    : num_classes(num_classes_), ignore_index(ignore_index_) {
    check_config(num_classes >= 1, "confusion matrix needs at least one class");
    counts.assign(static_cast<size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::update(const IntImage& gt, const IntImage& pred) {
    check_shape(gt.h == pred.h && gt.w == pred.w, "confusion update: mask size mismatch");
    for (int64_t i = 0; i < gt.size(); ++i) {
        const int g = gt.v[static_cast<size_t>(i)];
        if (g == ignore_index) continue;
        const int p = pred.v[static_cast<size_t>(i)];
        check_data(g >= 0 && g < num_classes,
                   "confusion update: ground-truth label " + std::to_string(g) + " out of range");
        check_data(p >= 0 && p < num_classes,
                   "confusion update: predicted label " + std::to_string(p) + " out of range");
        ++counts[static_cast<size_t>(g) * num_classes + p];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& o) {
    check_config(o.num_classes == num_classes && o.ignore_index == ignore_index,
                 "confusion merge: incompatible matrices");
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
}

int64_t ConfusionMatrix::total() const {
    int64_t n = 0;
    for (int64_t c : counts) n += c;
    return n;
}

double ConfusionMatrix::class_iou(int k) const {
    check_config(k >= 0 && k < num_classes, "class_iou: class out of range");
    const int64_t tp = at(k, k);
    int64_t fp = 0, fn = 0;
    for (int i = 0; i < num_classes; ++i) {
        if (i == k) continue;
        fp += at(i, k);
        fn += at(k, i);
    }
    const int64_t uni = tp + fp + fn;
    if (uni == 0) return kNoData;
    return static_cast<double>(tp) / static_cast<double>(uni);
}

double ConfusionMatrix::mean_iou() const {
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < num_classes; ++k) {
        const double iou = class_iou(k);
        if (std::isnan(iou)) continue;
        sum += iou;
        ++present;
    }
    if (present == 0) return kNoData;
    return sum / present;
}

double ConfusionMatrix::weighted_iou() const {
    const int64_t n = total();
    if (n == 0) return kNoData;
    double sum = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        int64_t gt_pixels = 0;
        for (int p = 0; p < num_classes; ++p) gt_pixels += at(k, p);
        if (gt_pixels == 0) continue;
        sum += static_cast<double>(gt_pixels) / static_cast<double>(n) * class_iou(k);
    }
    return sum;
}

VcDenominator parse_vc_denominator(const std::string& name) {
    if (name == "gt") return VcDenominator::gt;
    if (name == "pred") return VcDenominator::pred;
    throw ConfigError("unknown consistency denominator '" + name + "'");
}

std::string vc_denominator_name(VcDenominator d) {
    return d == VcDenominator::gt ? "gt" : "pred";
}

VcWindowCounts vc_window_counts(const std::vector<IntImage>& gt,
                                const std::vector<IntImage>& pred, int begin, int len,
                                VcDenominator denominator, int ignore_index) {
    check_config(len >= 1, "consistency window must cover at least one frame");
    check_data(gt.size() == pred.size(), "consistency: sequence length mismatch");
    check_data(begin >= 0 && begin + len <= static_cast<int>(gt.size()),
               "consistency: window outside the sequence");
    const IntImage& first = gt[static_cast<size_t>(begin)];
    for (int f = 0; f < len; ++f) {
        const IntImage& g = gt[static_cast<size_t>(begin + f)];
        const IntImage& p = pred[static_cast<size_t>(begin + f)];
        check_shape(g.h == first.h && g.w == first.w && p.h == first.h && p.w == first.w,
                    "consistency: mask size mismatch in window");
    }

    VcWindowCounts out;
    for (int64_t i = 0; i < first.size(); ++i) {
        bool skip = false, gt_consistent = true, pred_consistent = true;
        const int g0 = gt[static_cast<size_t>(begin)].v[static_cast<size_t>(i)];
        const int p0 = pred[static_cast<size_t>(begin)].v[static_cast<size_t>(i)];
        for (int f = 0; f < len; ++f) {
            const int g = gt[static_cast<size_t>(begin + f)].v[static_cast<size_t>(i)];
            if (g == ignore_index) {
                skip = true;
                break;
            }
            if (g != g0) gt_consistent = false;
            if (pred[static_cast<size_t>(begin + f)].v[static_cast<size_t>(i)] != p0)
                pred_consistent = false;
        }
        if (skip) continue;
        const bool in_denominator =
            denominator == VcDenominator::gt ? gt_consistent : pred_consistent;
        if (in_denominator) ++out.consistent;
        if (gt_consistent && pred_consistent && g0 == p0) ++out.agree;
    }
    return out;
}

double vc_ratio(const VcWindowCounts& c) {
    if (c.consistent == 0) return 1.0;
    return static_cast<double>(c.agree) / static_cast<double>(c.consistent);
}

double video_consistency(const std::vector<IntImage>& gt, const std::vector<IntImage>& pred,
                         VcDenominator denominator, int ignore_index) {
    return vc_ratio(
        vc_window_counts(gt, pred, 0, static_cast<int>(gt.size()), denominator, ignore_index));
}

void MeanVc::add_clip(const std::vector<IntImage>& gt, const std::vector<IntImage>& pred) {
    check_config(window_len >= 1, "consistency window must cover at least one frame");
    check_data(gt.size() == pred.size(), "consistency: sequence length mismatch");
    const int t = static_cast<int>(gt.size());
    if (t < window_len) {
        ++short_clips;
        return;
    }
    for (int i = 0; i + window_len <= t; ++i) {
        sum += vc_ratio(vc_window_counts(gt, pred, i, window_len, denominator, ignore_index));
        ++windows;
    }
}

double MeanVc::mean() const {
    if (windows == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / static_cast<double>(windows);
}

}  // namespace evseg
