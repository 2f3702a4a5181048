#include "heatmap.hpp"

#include <algorithm>
#include <limits>

namespace hsjp::heatmap {

HeatmapStack HeatmapStack::zeros(int c, int h, int w) {
    if (c < 1 || h < 1 || w < 1) throw ArgError("HeatmapStack::zeros: invalid shape");
    HeatmapStack s;
    s.channels = c;
    s.height = h;
    s.width = w;
    s.data.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
    s.mask.assign(static_cast<std::size_t>(c), 1);
    return s;
}

double sigma_bound(int n, int out_size) {
    if (n < 1) throw ArgError("sigma_bound: n must be >= 1");
    return static_cast<double>(out_size) / (6.0 * n);
}

HeatmapStack render_targets(const GaussianSpec& spec, int out_h, int out_w) {
    if (spec.sigma <= 0.0) throw ArgError("render_targets: sigma must be > 0");
    if (spec.centers.empty()) throw ArgError("render_targets: no centers");
    HeatmapStack s = HeatmapStack::zeros(static_cast<int>(spec.centers.size()), out_h, out_w);
    for (int i = 0; i < s.channels; ++i) {
        const Point c = spec.centers[static_cast<std::size_t>(i)];
        const bool inside = c.x >= 0.0 && c.x < out_w && c.y >= 0.0 && c.y < out_h;
        if (!inside) {
            s.mask[static_cast<std::size_t>(i)] = 0;
            continue;  // channel stays zero
        }
        render_gaussian(s.channel(i), out_h, out_w, c.x, c.y, spec.sigma);
    }
    return s;
}

namespace {

void check_same_shape(const HeatmapStack& g, const HeatmapStack& h) {
    if (g.channels != h.channels || g.height != h.height || g.width != h.width)
        throw ShapeError("heatmap stacks differ: " + std::to_string(g.channels) + "x" +
                         std::to_string(g.height) + "x" + std::to_string(g.width) + " vs " +
                         std::to_string(h.channels) + "x" + std::to_string(h.height) + "x" +
                         std::to_string(h.width));
}

}  // namespace

double masked_mse(const HeatmapStack& g, const HeatmapStack& h) {
    check_same_shape(g, h);
    return masked_mse_raw(g.data.data(), h.data.data(), g.mask.data(), g.channels, g.height,
                          g.width);
}

HeatmapStack masked_mse_gradient(const HeatmapStack& g, const HeatmapStack& h) {
    check_same_shape(g, h);
    HeatmapStack d = HeatmapStack::zeros(g.channels, g.height, g.width);
    d.mask = g.mask;
    masked_mse_gradient_raw(g.data.data(), h.data.data(), g.mask.data(), g.channels, g.height,
                            g.width, d.data.data());
    return d;
}

std::vector<Peak> decode_peaks_raw(const float* data, const std::uint8_t* mask, int c, int h,
                                   int w) {
    std::vector<Peak> peaks(static_cast<std::size_t>(c));
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const float lowest = std::numeric_limits<float>::lowest();
    for (int i = 0; i < c; ++i) {
        const float* p = data + plane * i;
        std::size_t best = 0;
        float best_v = p[0];
        for (std::size_t k = 1; k < plane; ++k)
            if (p[k] > best_v) {  // strict: first (smallest row-major) index wins ties
                best_v = p[k];
                best = k;
            }
        const int by = static_cast<int>(best) / w;
        const int bx = static_cast<int>(best) % w;

        auto value_at = [&](int y, int x) -> float {
            if (x < 0 || y < 0 || x >= w || y >= h) return lowest;
            return p[static_cast<std::size_t>(y) * w + x];
        };
        auto shift = [](float neg, float pos) -> double {
            if (pos > neg) return 0.25;
            if (neg > pos) return -0.25;
            return 0.0;
        };

        Peak& pk = peaks[static_cast<std::size_t>(i)];
        pk.x = bx + 0.5 + shift(value_at(by, bx - 1), value_at(by, bx + 1));
        pk.y = by + 0.5 + shift(value_at(by - 1, bx), value_at(by + 1, bx));
        pk.score = best_v;
        pk.valid = mask ? mask[i] != 0 : true;
    }
    return peaks;
}

std::vector<Peak> decode_peaks(const HeatmapStack& stack) {
    return decode_peaks_raw(stack.data.data(), stack.mask.data(), stack.channels, stack.height,
                            stack.width);
}

Image mosaic(const HeatmapStack& stack, int tiles_per_row) {
    if (tiles_per_row < 1) {
        tiles_per_row = 1;
        while (tiles_per_row * tiles_per_row < stack.channels) ++tiles_per_row;
    }
    const int rows = (stack.channels + tiles_per_row - 1) / tiles_per_row;
    Image img = Image::zeros(rows * stack.height, tiles_per_row * stack.width, 1);
    for (int c = 0; c < stack.channels; ++c) {
        const int ty = (c / tiles_per_row) * stack.height;
        const int tx = (c % tiles_per_row) * stack.width;
        const float* p = stack.channel(c);
        for (int y = 0; y < stack.height; ++y)
            for (int x = 0; x < stack.width; ++x)
                img.at(ty + y, tx + x, 0) =
                    std::clamp(p[static_cast<std::size_t>(y) * stack.width + x], 0.0f, 1.0f);
    }
    return img;
}

}  // namespace hsjp::heatmap
