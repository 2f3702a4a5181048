#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "affine.hpp"
#include "error.hpp"
#include "image.hpp"

namespace hsjp::heatmap {

using imaging::Image;
using imaging::Point;

// C x H x W response tensor with a per-channel visibility mask.
// mask[i] is false iff channel i's target center fell outside the frame.
struct HeatmapStack {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;        // channel-major
    std::vector<std::uint8_t> mask; // per channel

    static HeatmapStack zeros(int c, int h, int w);
    float* channel(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
    const float* channel(int c) const {
        return data.data() + static_cast<std::size_t>(c) * height * width;
    }
};

struct GaussianSpec {
    double sigma = 1.5;          // heatmap-space pixels
    std::vector<Point> centers;  // heatmap coordinates, one per channel
};

// Upper bound for sigma so the 3-sigma support stays inside one grid cell:
// out_size / (6 n), in heatmap units.
double sigma_bound(int n, int out_size);

// G_i(x', y') = exp(-((x'-xi)^2 + (y'-yi)^2) / (2 sigma^2)) evaluated at
// pixel centers (x+0.5, y+0.5). Channels whose center is outside
// [0, w) x [0, h) get mask false and all-zero data.
HeatmapStack render_targets(const GaussianSpec& spec, int out_h, int out_w);

template <class T>
void render_gaussian(T* dst, int h, int w, double cx, double cy, double sigma) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < h; ++y) {
        const double dy = (y + 0.5) - cy;
        for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5) - cx;
            dst[static_cast<std::size_t>(y) * w + x] =
                static_cast<T>(std::exp(-(dx * dx + dy * dy) * inv));
        }
    }
}

// (1 / (C*H*W)) * sum_i sum_xy M_i * (G - H)^2. The normalizer stays C*H*W
// even when some masks are zero.
template <class T>
double masked_mse_raw(const T* g, const T* h, const std::uint8_t* mask, int c, int hh, int ww) {
    const std::size_t plane = static_cast<std::size_t>(hh) * ww;
    double sum = 0.0;
    for (int i = 0; i < c; ++i) {
        if (!mask[i]) continue;
        const T* gp = g + plane * i;
        const T* hp = h + plane * i;
        for (std::size_t k = 0; k < plane; ++k) {
            const double d = static_cast<double>(gp[k]) - static_cast<double>(hp[k]);
            sum += d * d;
        }
    }
    return sum / (static_cast<double>(c) * static_cast<double>(plane));
}

// dL/dH = -2 * M_i * (G - H) / (C*H*W).
template <class T>
void masked_mse_gradient_raw(const T* g, const T* h, const std::uint8_t* mask, int c, int hh,
                             int ww, T* dout) {
    const std::size_t plane = static_cast<std::size_t>(hh) * ww;
    const double scale = 2.0 / (static_cast<double>(c) * static_cast<double>(plane));
    for (int i = 0; i < c; ++i) {
        const T* gp = g + plane * i;
        const T* hp = h + plane * i;
        T* dp = dout + plane * i;
        if (!mask[i]) {
            for (std::size_t k = 0; k < plane; ++k) dp[k] = T(0);
            continue;
        }
        for (std::size_t k = 0; k < plane; ++k)
            dp[k] = static_cast<T>(-scale * (static_cast<double>(gp[k]) -
                                             static_cast<double>(hp[k])));
    }
}

double masked_mse(const HeatmapStack& g, const HeatmapStack& h);
HeatmapStack masked_mse_gradient(const HeatmapStack& g, const HeatmapStack& h);

struct Peak {
    double x = 0.0;  // continuous heatmap coordinates (pixel centers at +0.5)
    double y = 0.0;
    double score = 0.0;
    bool valid = true;
};

// Per channel: row-major-first argmax, then a quarter-pixel shift along each
// axis toward the strictly larger neighbor (out-of-bounds neighbors lose).
std::vector<Peak> decode_peaks_raw(const float* data, const std::uint8_t* mask, int c, int h,
                                   int w);
std::vector<Peak> decode_peaks(const HeatmapStack& stack);

// One tile per channel (values * 255), row-major, for visualization.
Image mosaic(const HeatmapStack& stack, int tiles_per_row = 0);

}  // namespace hsjp::heatmap
