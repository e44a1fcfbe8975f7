#include "evseg/optim.hpp"

#include <cmath>

namespace evseg {

double poly_lr(double base, int64_t iter, int64_t total, double power) {
    check_config(total > 0, "poly_lr: total steps must be positive");
    check_config(iter >= 0 && iter < total, "poly_lr: step outside the schedule");
    return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(total), power);
}

void AdamW::init(const ParamRegistry& reg) {
    steps = 0;
    m.clear();
    v.clear();
    for (const auto& [name, p] : reg.items) {
        m.emplace_back(p->value.shape);
        v.emplace_back(p->value.shape);
    }
}

void AdamW::step(ParamRegistry& reg, double lr) {
    check_config(reg.items.size() == m.size(), "optimizer: registry size changed since init");
    ++steps;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (size_t i = 0; i < reg.items.size(); ++i) {
        Param& p = *reg.items[i].second;
        Tensor& mi = m[i];
        Tensor& vi = v[i];
        for (int64_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            mi[j] = beta1 * mi[j] + (1.0 - beta1) * g;
            vi[j] = beta2 * vi[j] + (1.0 - beta2) * g * g;
            const double mhat = mi[j] / bc1;
            const double vhat = vi[j] / bc2;
            p.value[j] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p.value[j]);
        }
    }
}

}  // namespace evseg
