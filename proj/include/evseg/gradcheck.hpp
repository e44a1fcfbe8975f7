#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// One tensor to check: perturb entries of *value, compare central finite
// differences of the loss against the already-computed analytic *grad.
struct GradCheckItem {
    std::string name;
    Tensor* value;
    const Tensor* grad;
};

struct GradCheckReport {
    double max_rel = 0.0;
    std::string worst_item;
    int64_t worst_index = -1;
    int64_t checked = 0;
};

inline double grad_rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1e-3, std::abs(analytic), std::abs(numeric)});
}

// loss() must recompute the full forward pass from the current tensor values
// and be free of internal randomness. stride subsamples large tensors.
inline GradCheckReport gradcheck(const std::function<double()>& loss,
                                 const std::vector<GradCheckItem>& items, int64_t stride = 1,
                                 double h = 1e-5) {
    GradCheckReport report;
    for (const GradCheckItem& item : items) {
        check_shape(item.value->same_shape(*item.grad),
                    "gradcheck: value/grad shape mismatch for " + item.name);
        for (int64_t i = 0; i < item.value->size(); i += stride) {
            const double saved = (*item.value)[i];
            (*item.value)[i] = saved + h;
            const double up = loss();
            (*item.value)[i] = saved - h;
            const double dn = loss();
            (*item.value)[i] = saved;
            const double numeric = (up - dn) / (2.0 * h);
            const double rel = grad_rel_err((*item.grad)[i], numeric);
            ++report.checked;
            if (rel > report.max_rel) {
                report.max_rel = rel;
                report.worst_item = item.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace evseg
