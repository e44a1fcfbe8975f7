#include "evseg/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evseg {

void validate(const SimConfig& cfg) {
    check_config(cfg.contrast_threshold > 0.0, "contrast_threshold must be positive");
    check_config(cfg.eps > 0.0, "eps must be positive");
    check_config(cfg.delta_t > 0.0, "delta_t must be positive");
    check_config(cfg.max_events_per_pixel > 0, "max_events_per_pixel must be positive");
}

std::vector<EventTuple> frames_to_events(const Tensor& prev, const Tensor& curr, double t0,
                                         double t1, const SimConfig& cfg) {
    validate(cfg);
    check_shape(prev.rank() == 3 && prev.same_shape(curr),
                "frames_to_events: frames must be (H,W,C) with matching shapes");
    check_config(t1 > t0, "frames_to_events: window must satisfy t1 > t0");
    const int h = prev.dim(0), w = prev.dim(1), c = prev.dim(2);
    const double span = t1 - t0;

    std::vector<EventTuple> events;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double lp = 0.0, lc = 0.0;
            for (int ci = 0; ci < c; ++ci) {
                lp += prev.at(y, x, ci);
                lc += curr.at(y, x, ci);
            }
            lp /= c;
            lc /= c;
            check_data(lp + cfg.eps > 0.0 && lc + cfg.eps > 0.0,
                       "negative luminance at pixel (" + std::to_string(x) + "," +
                           std::to_string(y) + ")");
            const double d = std::log(lc + cfg.eps) - std::log(lp + cfg.eps);
            const int n = static_cast<int>(std::floor(std::abs(d) / cfg.contrast_threshold));
            if (n == 0) continue;
            const int p = d > 0.0 ? 1 : 0;
            for (int k = 1; k <= n; ++k)
                events.push_back({x, y, p, t0 + span * static_cast<double>(k) / n});
        }
    }
    std::sort(events.begin(), events.end(), [](const EventTuple& a, const EventTuple& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    return events;
}

EventFrame events_to_frame(const std::vector<EventTuple>& events, int h, int w,
                           const SimConfig& cfg) {
    validate(cfg);
    check_config(h > 0 && w > 0, "events_to_frame: positive dimensions required");
    std::vector<int> net(static_cast<size_t>(h) * w, 0);
    EventFrame frame;
    bool first = true;
    for (const EventTuple& e : events) {
        if (e.x < 0 || e.x >= w || e.y < 0 || e.y >= h || (e.p != 0 && e.p != 1))
            throw DataError("bad event (x=" + std::to_string(e.x) + ", y=" + std::to_string(e.y) +
                            ", p=" + std::to_string(e.p) + ", t=" + std::to_string(e.t) +
                            ") for " + std::to_string(w) + "x" + std::to_string(h) + " frame");
        net[static_cast<size_t>(e.y) * w + e.x] += e.p == 1 ? 1 : -1;
        if (first || e.t < frame.window_start) frame.window_start = e.t;
        if (first || e.t > frame.window_end) frame.window_end = e.t;
        first = false;
    }
    frame.image = Tensor({h, w, 1});
    const double cap = cfg.max_events_per_pixel;
    for (int64_t i = 0; i < frame.image.size(); ++i) {
        const double scaled = std::clamp(net[static_cast<size_t>(i)] / cap, -1.0, 1.0);
        frame.image[i] = 0.5 + 0.5 * scaled;
    }
    return frame;
}

}  // namespace evseg
