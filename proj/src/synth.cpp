#include "evseg/synth.hpp"

#include <cmath>

#include "evseg/common.hpp"

namespace evseg {

namespace {

// Signed area of the triangle (a, b, p); positive when p is left of a->b.
double edge_side(double ax, double ay, double bx, double by, double px,
                 double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

bool inside_triangle(const SynthShape& s, double px, double py) {
    // Isoceles triangle: apex above the center, base below.
    const double ax = s.cx, ay = s.cy - s.size;
    const double bx = s.cx - s.size, by = s.cy + s.size;
    const double cx = s.cx + s.size, cy = s.cy + s.size;
    const double d0 = edge_side(ax, ay, bx, by, px, py);
    const double d1 = edge_side(bx, by, cx, cy, px, py);
    const double d2 = edge_side(cx, cy, ax, ay, px, py);
    const bool any_neg = d0 < 0.0 || d1 < 0.0 || d2 < 0.0;
    const bool any_pos = d0 > 0.0 || d1 > 0.0 || d2 > 0.0;
    return !(any_neg && any_pos);
}

SynthShape sample_shape(const SynthConfig& cfg, Rng& rng) {
    SynthShape s;
    s.class_id = 1 + static_cast<int>(rng.uniform_int(4));
    const double lo = cfg.height / 10.0;
    const double hi = cfg.height / 5.0;
    s.size = rng.uniform(lo, hi);
    s.cx = rng.uniform(s.size, cfg.width - s.size);
    s.cy = rng.uniform(s.size, cfg.height - s.size);
    const double speed = rng.uniform(0.5, 2.0);
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    s.vx = speed * std::cos(angle);
    s.vy = speed * std::sin(angle);
    s.aspect = rng.uniform(0.5, 0.9);
    for (int c = 0; c < 3; ++c) s.albedo[c] = rng.uniform(0.2, 0.9);
    return s;
}

// Advance one frame, reflecting the velocity when the shape's bounding box
// would leave the image.
void step_shape(const SynthConfig& cfg, SynthShape& s) {
    s.cx += s.vx;
    s.cy += s.vy;
    if (s.cx < s.size) {
        s.cx = 2.0 * s.size - s.cx;
        s.vx = -s.vx;
    }
    if (s.cx > cfg.width - s.size) {
        s.cx = 2.0 * (cfg.width - s.size) - s.cx;
        s.vx = -s.vx;
    }
    if (s.cy < s.size) {
        s.cy = 2.0 * s.size - s.cy;
        s.vy = -s.vy;
    }
    if (s.cy > cfg.height - s.size) {
        s.cy = 2.0 * (cfg.height - s.size) - s.cy;
        s.vy = -s.vy;
    }
}

}  // namespace

void validate(const SynthConfig& cfg) {
    check_config(cfg.height > 0 && cfg.width > 0, "frame dims must be positive");
    check_config(cfg.frames > 0, "frames must be positive");
    check_config(cfg.min_shapes >= 1, "min_shapes must be at least 1");
    check_config(cfg.max_shapes >= cfg.min_shapes,
                 "max_shapes must be >= min_shapes");
    check_config(cfg.height >= 10 && cfg.width >= 10,
                 "frames smaller than 10x10 leave no room for shapes");
}

bool shape_contains(const SynthShape& s, double px, double py) {
    const double dx = px - s.cx;
    const double dy = py - s.cy;
    switch (s.class_id) {
        case 1:
            return dx * dx + dy * dy <= s.size * s.size;
        case 2:
            return std::abs(dx) <= s.size && std::abs(dy) <= s.size * s.aspect;
        case 3:
            return inside_triangle(s, px, py);
        case 4: {
            const double a = s.size;
            const double b = s.size * s.aspect;
            return (dx / a) * (dx / a) + (dy / b) * (dy / b) <= 1.0;
        }
        default:
            throw ConfigError("unknown shape class " +
                              std::to_string(s.class_id));
    }
}

SynthClip render_clip(const SynthConfig& cfg, int64_t clip_index) {
    validate(cfg);
    Rng rng = Rng(cfg.seed).derive("clip", clip_index);

    double bg0[3];
    double bg1[3];
    for (int c = 0; c < 3; ++c) bg0[c] = rng.uniform(0.25, 0.75);
    for (int c = 0; c < 3; ++c) bg1[c] = rng.uniform(0.25, 0.75);

    const int n_shapes =
        cfg.min_shapes +
        static_cast<int>(rng.uniform_int(cfg.max_shapes - cfg.min_shapes + 1));
    std::vector<SynthShape> shapes;
    for (int i = 0; i < n_shapes; ++i) shapes.push_back(sample_shape(cfg, rng));

    SynthClip clip;
    for (int t = 0; t < cfg.frames; ++t) {
        Tensor frame({cfg.height, cfg.width, 3});
        IntImage mask(cfg.height, cfg.width);
        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                const double px = x + 0.5;
                const double py = y + 0.5;
                // Diagonal gradient between the two background colors.
                const double u =
                    0.5 * (px / cfg.width + py / cfg.height);
                int id = 0;
                double color[3];
                for (int c = 0; c < 3; ++c)
                    color[c] = bg0[c] + (bg1[c] - bg0[c]) * u;
                // Later shapes draw over earlier ones.
                for (const SynthShape& s : shapes) {
                    if (shape_contains(s, px, py)) {
                        id = s.class_id;
                        for (int c = 0; c < 3; ++c) color[c] = s.albedo[c];
                    }
                }
                mask.at(y, x) = id;
                for (int c = 0; c < 3; ++c) frame.at(y, x, c) = color[c];
            }
        }
        clip.frames.push_back(std::move(frame));
        clip.masks.push_back(std::move(mask));
        for (SynthShape& s : shapes) step_shape(cfg, s);
    }
    return clip;
}

}  // namespace evseg
