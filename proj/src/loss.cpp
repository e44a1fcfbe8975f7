#include "evseg/loss.hpp"

#include <cmath>
#include <vector>

namespace evseg {

XentResult softmax_xent(const Tensor& logits, const IntImage& gt, int ignore_index,
                        Tensor& grad) {
    check_shape(logits.rank() == 3, "cross entropy: (H,W,K) logits required");
    const int h = logits.dim(0), w = logits.dim(1), k = logits.dim(2);
    check_shape(gt.h == h && gt.w == w, "cross entropy: mask size mismatch");

    grad = Tensor(logits.shape);
    XentResult res;
    std::vector<double> prob(static_cast<size_t>(k));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int g = gt.at(y, x);
            if (g == ignore_index) continue;
            check_data(g >= 0 && g < k,
                       "cross entropy: label " + std::to_string(g) + " out of range");
            double peak = logits.at(y, x, 0);
            for (int c = 1; c < k; ++c) peak = std::max(peak, logits.at(y, x, c));
            double z = 0.0;
            for (int c = 0; c < k; ++c) {
                prob[static_cast<size_t>(c)] = std::exp(logits.at(y, x, c) - peak);
                z += prob[static_cast<size_t>(c)];
            }
            for (int c = 0; c < k; ++c) prob[static_cast<size_t>(c)] /= z;
            // Log-space form of -log(prob[g]); immune to prob underflow.
            res.loss += std::log(z) - (logits.at(y, x, g) - peak);
            for (int c = 0; c < k; ++c)
                grad.at(y, x, c) = prob[static_cast<size_t>(c)] - (c == g ? 1.0 : 0.0);
            ++res.counted;
        }
    }
    if (res.counted > 0) {
        res.loss /= static_cast<double>(res.counted);
        grad.scale_(1.0 / static_cast<double>(res.counted));
    }
    return res;
}

}  // namespace evseg
